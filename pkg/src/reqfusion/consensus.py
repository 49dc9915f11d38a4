"""Cross-provider deduplication and weighted consensus.

Candidates from all providers are clustered by embedding cosine similarity
(strictly above the dedup threshold), one merged requirement per cluster.
Consensus confidence is the weighted fraction of enabled providers that
contributed to the cluster; items below the flag threshold go to human
review.

The default embedding is a deterministic character-trigram hash so the whole
pipeline is reproducible offline; a different embedding function with the
same vector contract can be plugged in.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyProviderSet
from .ingest import Chunk
from .providers import CandidateRequirement, ProviderProfile
from .types import PEGS_ORDER, PegsCategory, Priority, ReqType

EMBED_DIM = 512
DEDUP_THRESHOLD = 0.85
FLAG_THRESHOLD = 0.5

EmbedFn = Callable[[str], np.ndarray]

_PUNCT_RE = re.compile(r"[^\w\s]", re.UNICODE)


def _normalize_text(text: str) -> str:
    return " ".join(_PUNCT_RE.sub(" ", text.lower()).split())


def _bucket(trigram: str) -> int:
    digest = hashlib.blake2b(trigram.encode("utf-8"), digest_size=8, person=b"rfembed1").digest()
    return int.from_bytes(digest, "big") % EMBED_DIM


@lru_cache(maxsize=65536)
def _embed_normalized(norm: str) -> np.ndarray:
    v = np.zeros(EMBED_DIM, dtype=np.float64)
    if not norm:
        v[0] = 1.0
    else:
        padded = f" {norm} "
        for i in range(len(padded) - 2):
            v[_bucket(padded[i : i + 3])] += 1.0
        v /= np.linalg.norm(v)
    v.setflags(write=False)
    return v


def embed_default(text: str) -> np.ndarray:
    """Deterministic 512-dim L2-normalized trigram-hash embedding.

    Case, punctuation and whitespace runs do not affect the vector; empty
    text maps to the first basis vector.
    """
    return _embed_normalized(_normalize_text(text))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two already-normalized vectors."""
    if a.shape != b.shape:
        raise DimensionMismatch(f"vector shapes differ: {a.shape} vs {b.shape}")
    return float(np.dot(a, b))


@dataclass
class Cluster:
    cluster_id: str
    members: list[CandidateRequirement]
    representative: CandidateRequirement
    centroid: np.ndarray

    def provider_ids(self) -> set[str]:
        return {m.provider_id for m in self.members}


def cluster_candidates(
    candidates: Sequence[CandidateRequirement],
    threshold: float = DEDUP_THRESHOLD,
    embed: EmbedFn = embed_default,
) -> list[Cluster]:
    """Greedy dedup clustering over candidates in canonical order.

    Candidates are visited sorted by (text, provider_id); each joins the
    first cluster whose founding member's similarity is strictly above the
    threshold, else founds its own. The canonical ordering makes the result
    independent of input permutation.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")

    ordered = sorted(candidates, key=lambda c: (c.text, c.provider_id))
    clusters: list[tuple[list[CandidateRequirement], np.ndarray, np.ndarray]] = []
    for cand in ordered:
        vec = embed(cand.text)
        for members, rep_vec, vec_sum in clusters:
            if cosine(vec, rep_vec) > threshold:
                members.append(cand)
                vec_sum += vec
                break
        else:
            clusters.append(([cand], vec, vec.copy()))

    out = []
    for idx, (members, _, vec_sum) in enumerate(clusters):
        centroid = vec_sum / np.linalg.norm(vec_sum)
        out.append(
            Cluster(
                cluster_id=f"cl-{idx:04d}",
                members=members,
                representative=members[0],
                centroid=centroid,
            )
        )
    return out


def consensus_confidence(
    cluster: Cluster, profiles: Sequence[ProviderProfile]
) -> float:
    """Weighted fraction of enabled providers with a member in the cluster.

    The denominator covers every enabled provider, so outages and missing
    extractions both lower confidence rather than hiding uncertainty.
    """
    enabled = [p for p in profiles if p.enabled]
    if not enabled:
        raise EmptyProviderSet("consensus needs at least one enabled provider")
    contributors = cluster.provider_ids()
    matched = sum(p.weight for p in enabled if p.provider_id in contributors)
    total = sum(p.weight for p in enabled)
    return matched / total


@dataclass(frozen=True)
class Trace:
    doc_id: str
    section_label: str
    page: int
    chunk_id: str


@dataclass(frozen=True)
class MergedRequirement:
    req_id: str
    text: str
    req_type: ReqType
    pegs: PegsCategory
    priority: Priority
    category_label: str
    confidence: float
    contributing_providers: frozenset[str]
    flagged_for_review: bool
    trace: Trace


def _profile_index(profiles: Sequence[ProviderProfile]) -> dict[str, ProviderProfile]:
    return {p.provider_id: p for p in profiles}


def _select_representative(
    cluster: Cluster, by_id: Mapping[str, ProviderProfile]
) -> CandidateRequirement:
    """Member from the highest-weight provider; ties break toward the
    lowest failover rank, then the lexicographically smallest text."""

    def sort_key(member: CandidateRequirement):
        profile = by_id.get(member.provider_id)
        weight = profile.weight if profile else 1.0
        rank = profile.failover_rank if profile else 1 << 30
        return (-weight, rank, member.text, member.provider_id)

    return min(cluster.members, key=sort_key)


def _vote_label(
    cluster: Cluster,
    by_id: Mapping[str, ProviderProfile],
    fallback,
    get_label,
):
    """Weighted majority over contributing providers; ties keep ``fallback``.

    Each provider votes once, with its first member in canonical text order.
    """
    per_provider: dict[str, CandidateRequirement] = {}
    for member in sorted(cluster.members, key=lambda m: m.text):
        per_provider.setdefault(member.provider_id, member)

    votes: dict = {}
    for provider_id, member in per_provider.items():
        profile = by_id.get(provider_id)
        weight = profile.weight if profile else 1.0
        label = get_label(member)
        votes[label] = votes.get(label, 0.0) + weight

    best = max(votes.values())
    winners = [label for label, v in votes.items() if v == best]
    if len(winners) == 1:
        return winners[0]
    return fallback


def merge(
    run_records: Iterable,
    profiles: Sequence[ProviderProfile],
    chunks: Mapping[str, Chunk],
    threshold: float = DEDUP_THRESHOLD,
    flag_threshold: float = FLAG_THRESHOLD,
    embed: EmbedFn = embed_default,
) -> list[MergedRequirement]:
    """Pool, deduplicate and score the candidates of one document's run.

    Clustering happens inside each (pegs, type) partition so differently
    classified statements never merge. Label conflicts resolve by weighted
    provider majority, falling back to the representative's labels. The
    trace is the representative's chunk provenance.
    """
    by_id = _profile_index(profiles)
    pool: list[CandidateRequirement] = []
    for record in run_records:
        for response in record.accepted_responses():
            pool.extend(response.candidates)

    partitions: dict[tuple[PegsCategory, ReqType], list[CandidateRequirement]] = {}
    for cand in pool:
        partitions.setdefault((cand.pegs, cand.req_type), []).append(cand)

    merged: list[MergedRequirement] = []
    for pegs in PEGS_ORDER:
        for req_type in (ReqType.FUNCTIONAL, ReqType.NON_FUNCTIONAL):
            part = partitions.get((pegs, req_type))
            if not part:
                continue
            for cluster in cluster_candidates(part, threshold, embed):
                confidence = consensus_confidence(cluster, profiles)
                rep = _select_representative(cluster, by_id)
                priority = _vote_label(cluster, by_id, rep.priority, lambda m: m.priority)
                category = _vote_label(
                    cluster, by_id, rep.category_label, lambda m: m.category_label
                )
                chunk = chunks[rep.chunk_id]
                digest = hashlib.sha256(
                    f"{pegs.value}|{req_type.value}|{rep.text}".encode("utf-8")
                ).hexdigest()
                merged.append(
                    MergedRequirement(
                        req_id=f"req-{digest[:12]}",
                        text=rep.text,
                        req_type=req_type,
                        pegs=pegs,
                        priority=priority,
                        category_label=category,
                        confidence=confidence,
                        contributing_providers=frozenset(cluster.provider_ids()),
                        flagged_for_review=confidence < flag_threshold,
                        trace=Trace(
                            doc_id=chunk.doc_id,
                            section_label=chunk.section_label,
                            page=chunk.page,
                            chunk_id=chunk.chunk_id,
                        ),
                    )
                )
    return merged


@dataclass(frozen=True)
class FlagStats:
    total: int
    flagged: int
    flagged_fraction: float


def flag_rate(merged: Sequence[MergedRequirement]) -> FlagStats:
    """Count of review-flagged items; the fraction is 0.0 for empty input."""
    total = len(merged)
    flagged = sum(1 for m in merged if m.flagged_for_review)
    return FlagStats(
        total=total,
        flagged=flagged,
        flagged_fraction=(flagged / total) if total else 0.0,
    )
