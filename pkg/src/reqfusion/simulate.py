"""Monte-Carlo study of consensus as a hallucination filter.

Generative model, per trial:

* ``n_items`` real requirements exist; each of ``n_providers`` independently
  extracts each real item with probability ``detection_rate``.
* Hallucination events arrive Poisson-distributed. An event is *shared*
  with probability ``overlap_rate`` (two distinct random providers emit the
  same fabricated text) and otherwise unique to one random provider.
* The expected event volume is set so that, among merged items contributed
  by exactly one provider, the expected hallucination fraction equals
  ``fp_rate_single``.

Every trial runs the production merge/flag pipeline on the synthesized
provider responses; nothing is re-implemented. All texts are drawn from a
pre-validated universe whose pairwise similarities sit below the dedup
threshold, so clusters form only on exact agreement. With
``overlap_rate = 0`` no fabricated text can reach two providers, hence the
consensus-confirmed false-positive rate is structurally zero.
"""

from __future__ import annotations

import math
import random
import string
from dataclasses import dataclass

import numpy as np

from . import consensus
from .errors import InvalidRate
from .ingest import Chunk
from .orchestrator import Mode, RunRecord
from .providers import (
    CandidateRequirement,
    Outcome,
    ProviderKind,
    ProviderProfile,
    ProviderResponse,
)
from .types import PEGS_ORDER, Priority, ReqType

_UNIVERSE_SEED = 311
_HALLUC_POOL = 512
_MAX_ITEMS = 1024

_SIM_CHUNK = Chunk(
    chunk_id="sim:c0",
    doc_id="sim-doc",
    section_label="§1",
    page=1,
    text="synthetic trial document",
    token_estimate=7,
)


@dataclass(frozen=True)
class SimulationParams:
    n_items: int = 12
    n_providers: int = 3
    fp_rate_single: float = 0.34
    overlap_rate: float = 0.5
    trials: int = 1000
    seed: int = 7
    detection_rate: float = 0.8

    def validate(self) -> None:
        for name in ("fp_rate_single", "overlap_rate", "detection_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidRate(f"{name} must be in [0, 1], got {value}")
        if self.fp_rate_single >= 1.0 and self.fp_rate_single != 0.0:
            raise InvalidRate("fp_rate_single must be below 1")
        if self.overlap_rate == 1.0 and self.fp_rate_single > 0.0:
            raise InvalidRate(
                "overlap_rate = 1 leaves no single-provider hallucinations, "
                "so fp_rate_single cannot be met"
            )
        if self.trials < 1:
            raise InvalidRate("trials must be >= 1")
        if not 1 <= self.n_items <= _MAX_ITEMS:
            raise InvalidRate(f"n_items must be in [1, {_MAX_ITEMS}]")
        if self.n_providers < 2:
            raise InvalidRate("n_providers must be >= 2")
        if self.detection_rate <= 0.0:
            raise InvalidRate("detection_rate must be positive")


@dataclass(frozen=True)
class RateEstimate:
    numerator: int
    denominator: int

    @property
    def rate(self) -> float:
        return self.numerator / self.denominator if self.denominator else 0.0

    @property
    def ci95(self) -> tuple[float, float]:
        if not self.denominator:
            return (0.0, 0.0)
        r = self.rate
        half = 1.96 * math.sqrt(max(r * (1.0 - r), 0.0) / self.denominator)
        return (max(r - half, 0.0), min(r + half, 1.0))


@dataclass
class SimulationReport:
    params: SimulationParams
    confirmed: RateEstimate
    flagged: RateEstimate
    singleton: RateEstimate
    merged_total: int

    def to_obj(self) -> dict:
        def block(est: RateEstimate) -> dict:
            lo, hi = est.ci95
            return {
                "false_positives": est.numerator,
                "items": est.denominator,
                "fp_rate": round(est.rate, 6),
                "ci95": [round(lo, 6), round(hi, 6)],
            }

        return {
            "trials": self.params.trials,
            "merged_total": self.merged_total,
            "consensus_confirmed": block(self.confirmed),
            "flagged_for_review": block(self.flagged),
            "single_provider": block(self.singleton),
        }


def _random_text(rng: random.Random) -> str:
    words = [
        "".join(rng.choice(string.ascii_lowercase) for _ in range(8)) for _ in range(5)
    ]
    return "the system shall " + " ".join(words)


_universe_cache: dict[tuple[int, int], tuple[list[str], list[str]]] = {}


def _build_universe(n_real: int, pool: int) -> tuple[list[str], list[str]]:
    """Deterministic text universe with all pairwise similarities <= 0.85.

    Regenerates any text that lands too close to an earlier one, so exact
    duplication is the only way two universe texts can ever cluster.
    """
    key = (n_real, pool)
    if key in _universe_cache:
        return _universe_cache[key]

    rng = random.Random(_UNIVERSE_SEED)
    texts: list[str] = []
    vectors: list[np.ndarray] = []
    while len(texts) < n_real + pool:
        candidate = _random_text(rng)
        vec = consensus.embed_default(candidate)
        if vectors and float(np.max(np.stack(vectors) @ vec)) > consensus.DEDUP_THRESHOLD:
            continue
        texts.append(candidate)
        vectors.append(vec)

    result = (texts[:n_real], texts[n_real:])
    _universe_cache[key] = result
    return result


def _expected_real_singletons(params: SimulationParams) -> float:
    k, p = params.n_providers, params.detection_rate
    return params.n_items * k * p * (1.0 - p) ** (k - 1)


def expected_event_volume(params: SimulationParams) -> float:
    """Mean hallucination events per trial implied by the target rates."""
    f = params.fp_rate_single
    if f == 0.0:
        return 0.0
    singles_target = f / (1.0 - f) * _expected_real_singletons(params)
    return singles_target / (1.0 - params.overlap_rate)


def simulate_hallucination(params: SimulationParams) -> SimulationReport:
    """Run the consensus pipeline over synthesized extractions.

    Reports false-positive rates among consensus-confirmed items (two or
    more contributing providers), among review-flagged items, and among
    single-provider items, each with a 95% Monte-Carlo interval.
    """
    params.validate()
    real_texts, halluc_pool = _build_universe(params.n_items, _HALLUC_POOL)
    halluc_set = set(halluc_pool)

    profiles = [
        ProviderProfile(
            provider_id=f"sim{i}",
            kind=ProviderKind.SCRIPTED_MOCK,
            weight=1.0,
            failover_rank=i,
        )
        for i in range(params.n_providers)
    ]
    chunks = {_SIM_CHUNK.chunk_id: _SIM_CHUNK}
    event_mean = expected_event_volume(params)

    # Stable label assignment per text, shared by every provider emitting it.
    label_index = {t: i for i, t in enumerate(real_texts)}
    label_index.update(
        {t: params.n_items + i for i, t in enumerate(halluc_pool)}
    )

    rng = np.random.default_rng(params.seed)
    confirmed_fp = confirmed_total = 0
    flagged_fp = flagged_total = 0
    singleton_fp = singleton_total = 0
    merged_total = 0

    def labels_for(index: int) -> tuple:
        pegs = PEGS_ORDER[index % 4]
        req_type = ReqType.FUNCTIONAL if (index // 4) % 2 == 0 else ReqType.NON_FUNCTIONAL
        return pegs, req_type

    for _ in range(params.trials):
        emissions: list[list[str]] = [[] for _ in range(params.n_providers)]

        detected = rng.random((params.n_items, params.n_providers)) < params.detection_rate
        for item in range(params.n_items):
            for provider in range(params.n_providers):
                if detected[item, provider]:
                    emissions[provider].append(real_texts[item])

        n_events = int(rng.poisson(event_mean)) if event_mean > 0 else 0
        n_events = min(n_events, _HALLUC_POOL)
        used_pool: set[int] = set()
        for _ in range(n_events):
            while True:
                idx = int(rng.integers(0, _HALLUC_POOL))
                if idx not in used_pool:
                    used_pool.add(idx)
                    break
            text = halluc_pool[idx]
            if rng.random() < params.overlap_rate:
                pair = rng.choice(params.n_providers, size=2, replace=False)
                for provider in pair:
                    emissions[int(provider)].append(text)
            else:
                emissions[int(rng.integers(0, params.n_providers))].append(text)

        responses = []
        for provider in range(params.n_providers):
            candidates = []
            for text in emissions[provider]:
                pegs, req_type = labels_for(label_index[text])
                candidates.append(
                    CandidateRequirement(
                        text=text,
                        req_type=req_type,
                        pegs=pegs,
                        priority=Priority.MEDIUM,
                        category_label="simulated",
                        self_confidence=0.8,
                        provider_id=profiles[provider].provider_id,
                        chunk_id=_SIM_CHUNK.chunk_id,
                    )
                )
            responses.append(
                ProviderResponse(
                    provider_id=profiles[provider].provider_id,
                    candidates=candidates,
                    outcome=Outcome.OK,
                )
            )
        record = RunRecord(
            prompt_id="sim-prompt",
            per_provider=responses,
            wall_latency_s=0.0,
            mode_used=Mode.PARALLEL,
        )

        merged = consensus.merge([record], profiles, chunks)
        merged_total += len(merged)
        for item in merged:
            is_fp = item.text in halluc_set
            contributors = len(item.contributing_providers)
            if contributors >= 2:
                confirmed_total += 1
                confirmed_fp += is_fp
            else:
                singleton_total += 1
                singleton_fp += is_fp
            if item.flagged_for_review:
                flagged_total += 1
                flagged_fp += is_fp

    return SimulationReport(
        params=params,
        confirmed=RateEstimate(confirmed_fp, confirmed_total),
        flagged=RateEstimate(flagged_fp, flagged_total),
        singleton=RateEstimate(singleton_fp, singleton_total),
        merged_total=merged_total,
    )
