"""Shared label enums used throughout the pipeline."""

from __future__ import annotations

from enum import Enum


class PegsCategory(str, Enum):
    """Four-part requirements taxonomy: Project, Environment, Goals, System."""

    PROJECT = "project"
    ENVIRONMENT = "environment"
    GOALS = "goals"
    SYSTEM = "system"

    @property
    def label(self) -> str:
        return self.value.capitalize()

    @classmethod
    def from_text(cls, raw: str) -> "PegsCategory":
        return cls(raw.strip().lower())


class ReqType(str, Enum):
    FUNCTIONAL = "functional"
    NON_FUNCTIONAL = "non-functional"

    @classmethod
    def from_text(cls, raw: str) -> "ReqType":
        norm = raw.strip().lower().replace("_", "-").replace(" ", "-")
        if norm == "nonfunctional":
            norm = "non-functional"
        return cls(norm)


class Priority(str, Enum):
    HIGH = "high"
    MEDIUM = "medium"
    LOW = "low"

    @classmethod
    def from_text(cls, raw: str) -> "Priority":
        return cls(raw.strip().lower())


# Canonical iteration order everywhere categories are enumerated or sorted.
PEGS_ORDER = (
    PegsCategory.PROJECT,
    PegsCategory.ENVIRONMENT,
    PegsCategory.GOALS,
    PegsCategory.SYSTEM,
)
