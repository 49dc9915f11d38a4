"""Exception types shared across the package."""

from __future__ import annotations


class ReqFusionError(Exception):
    """Base class for all package errors."""


class ConfigError(ReqFusionError):
    """Run configuration failed to parse or validate."""


# --- ingest ---------------------------------------------------------------

class DecodeError(ReqFusionError):
    """Input bytes are not valid UTF-8."""


class EmptyDocument(ReqFusionError):
    """Document contains no non-whitespace characters."""


class ManifestMismatch(ReqFusionError):
    """Section manifest is missing, malformed, or references bad offsets."""


# --- providers ------------------------------------------------------------

class ParseError(ReqFusionError):
    """No structured candidate block could be extracted from a reply."""


# --- consensus ------------------------------------------------------------

class DimensionMismatch(ReqFusionError):
    """Embedding vectors have different dimensionality."""


class EmptyProviderSet(ReqFusionError):
    """Consensus requested with no enabled providers."""


# --- orchestrator ----------------------------------------------------------

class AllProvidersFailed(ReqFusionError):
    """Every provider in the plan failed for one prompt.

    The partial ``RunRecord`` is attached so batch drivers can keep it.
    """

    def __init__(self, message: str, record=None):
        super().__init__(message)
        self.record = record


# --- store ------------------------------------------------------------------

class StorageError(ReqFusionError):
    """Backing store file is missing or unreadable."""


class DuplicateRun(ReqFusionError):
    """A run with this id was already persisted."""


class OrphanTrace(ReqFusionError):
    """A trace link references a section that was never ingested."""


class InvalidTransition(ReqFusionError):
    """Review decision attempted on a non-pending requirement."""


class UnknownRequirement(ReqFusionError):
    """No requirement with this id in the store."""


class UnknownRun(ReqFusionError):
    """No run with this id in the store."""


# --- metrics ----------------------------------------------------------------

class LengthMismatch(ReqFusionError):
    """Label sequences for agreement must have equal length."""


class EmptyInput(ReqFusionError):
    """Agreement statistics need at least one label pair."""


# --- simulation --------------------------------------------------------------

class InvalidRate(ReqFusionError):
    """Simulation rate parameter outside its valid range."""
