"""Provider profiles, candidate parsing and cost accounting.

Model replies are expected to carry a JSON array of requirement objects,
possibly wrapped in prose or code fences. Parsing is lenient per entry
(bad entries are dropped and counted) but strict about finding a
structured block at all.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum

from .errors import ParseError
from .types import PegsCategory, Priority, ReqType

MIN_CANDIDATE_CHARS = 10
DEFAULT_SELF_CONFIDENCE = 0.5

WEIGHT_MIN = 0.1
WEIGHT_MAX = 2.0

_FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_-]+)?\s*\n(.*?)```", re.DOTALL)


class ProviderKind(str, Enum):
    OPENAI_COMPATIBLE = "openai_compatible"
    ANTHROPIC_STYLE = "anthropic_style"
    SCRIPTED_MOCK = "scripted_mock"


class Outcome(str, Enum):
    OK = "ok"
    TIMEOUT = "timeout"
    HTTP_ERROR = "http_error"
    PARSE_ERROR = "parse_error"


@dataclass(frozen=True)
class ProviderProfile:
    """Identity, consensus weight, cost rates and failover position."""

    provider_id: str
    kind: ProviderKind
    weight: float = 1.0
    input_cost_per_1k_tokens: float = 0.0
    output_cost_per_1k_tokens: float = 0.0
    timeout_s: float = 30.0
    failover_rank: int = 0
    enabled: bool = True
    model: str | None = None
    base_url: str | None = None
    script_path: str | None = None

    def __post_init__(self):
        if not self.provider_id:
            raise ValueError("provider_id must be non-empty")
        if not WEIGHT_MIN <= self.weight <= WEIGHT_MAX:
            raise ValueError(
                f"weight must be in [{WEIGHT_MIN}, {WEIGHT_MAX}], got {self.weight}"
            )
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.failover_rank < 0:
            raise ValueError("failover_rank must be >= 0")


def validate_failover_ranks(profiles: list[ProviderProfile]) -> None:
    """Failover ranks must be unique across enabled providers."""
    ranks = [p.failover_rank for p in profiles if p.enabled]
    if len(ranks) != len(set(ranks)):
        raise ValueError("failover_rank must be unique across enabled providers")


@dataclass(frozen=True)
class CandidateRequirement:
    """One provider's extracted requirement for one chunk."""

    text: str
    req_type: ReqType
    pegs: PegsCategory
    priority: Priority
    category_label: str
    self_confidence: float
    provider_id: str
    chunk_id: str


@dataclass
class ProviderResponse:
    provider_id: str
    candidates: list[CandidateRequirement] = field(default_factory=list)
    input_tokens: int = 0
    output_tokens: int = 0
    latency_s: float = 0.0
    outcome: Outcome = Outcome.OK
    status_code: int | None = None
    parse_warnings: int = 0
    error_detail: str = ""

    @property
    def ok(self) -> bool:
        return self.outcome is Outcome.OK


def _find_structured_block(raw_text: str):
    """Locate the first JSON array (or object with a list field) in a reply."""
    attempts = [raw_text.strip()]
    attempts.extend(m.strip() for m in _FENCE_RE.findall(raw_text))

    decoder = json.JSONDecoder()
    for attempt in attempts:
        if not attempt:
            continue
        try:
            return json.loads(attempt)
        except json.JSONDecodeError:
            pass
        # Reply wraps the block in prose: scan forward for a parseable value.
        for idx, ch in enumerate(attempt):
            if ch not in "[{":
                continue
            try:
                value, _ = decoder.raw_decode(attempt[idx:])
            except json.JSONDecodeError:
                continue
            return value
    raise ParseError("no structured candidate block found in reply")


def _coerce_entry(entry, provider_id: str, chunk_id: str) -> CandidateRequirement | None:
    """Validate one reply entry; None means drop it."""
    if not isinstance(entry, dict):
        return None
    text = entry.get("text")
    if not isinstance(text, str):
        return None
    text = " ".join(text.split())
    if len(text) < MIN_CANDIDATE_CHARS:
        return None
    try:
        req_type = ReqType.from_text(str(entry["type"]))
        pegs = PegsCategory.from_text(str(entry["pegs"]))
    except (KeyError, ValueError):
        return None

    if "priority" in entry:
        try:
            priority = Priority.from_text(str(entry["priority"]))
        except ValueError:
            return None
    else:
        priority = Priority.MEDIUM

    category = str(entry.get("category", "")).strip()

    confidence = DEFAULT_SELF_CONFIDENCE
    if "confidence" in entry and entry["confidence"] is not None:
        if not isinstance(entry["confidence"], (int, float)) or isinstance(
            entry["confidence"], bool
        ):
            return None
        confidence = min(max(float(entry["confidence"]), 0.0), 1.0)

    return CandidateRequirement(
        text=text,
        req_type=req_type,
        pegs=pegs,
        priority=priority,
        category_label=category,
        self_confidence=confidence,
        provider_id=provider_id,
        chunk_id=chunk_id,
    )


def parse_candidates(
    raw_text: str, provider_id: str, chunk_id: str
) -> tuple[list[CandidateRequirement], int]:
    """Parse a provider reply into candidates.

    Returns ``(candidates, dropped)`` where ``dropped`` counts entries that
    failed field validation. Raises ParseError when no structured block
    exists at all.
    """
    block = _find_structured_block(raw_text)
    if isinstance(block, dict):
        for key in ("requirements", "candidates", "items"):
            if isinstance(block.get(key), list):
                block = block[key]
                break
    if not isinstance(block, list):
        raise ParseError("structured block is not a list of requirement entries")

    candidates: list[CandidateRequirement] = []
    dropped = 0
    for entry in block:
        candidate = _coerce_entry(entry, provider_id, chunk_id)
        if candidate is None:
            dropped += 1
        else:
            candidates.append(candidate)
    return candidates, dropped


def candidate_to_entry(candidate: CandidateRequirement) -> dict:
    """Serialize a candidate back into the reply entry schema."""
    return {
        "text": candidate.text,
        "type": candidate.req_type.value,
        "pegs": candidate.pegs.value,
        "priority": candidate.priority.value,
        "category": candidate.category_label,
        "confidence": candidate.self_confidence,
    }


def response_cost(response: ProviderResponse, profile: ProviderProfile) -> float:
    """USD cost of one response at the profile's per-1k-token rates.

    Rounded half-up to 6 decimals.
    """
    cost = (
        Decimal(response.input_tokens) / 1000 * Decimal(str(profile.input_cost_per_1k_tokens))
        + Decimal(response.output_tokens) / 1000 * Decimal(str(profile.output_cost_per_1k_tokens))
    )
    return float(cost.quantize(Decimal("0.000001"), rounding=ROUND_HALF_UP))


def mean_self_confidence(candidates: list[CandidateRequirement]) -> float | None:
    """Mean self-reported confidence; None when there are no candidates."""
    if not candidates:
        return None
    return sum(c.self_confidence for c in candidates) / len(candidates)
