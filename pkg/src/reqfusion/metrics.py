"""Evaluation: matching against ground truth, P/R/F1 per category,
category coverage, annotator agreement, cost/time accounting and the
prompting-strategy comparison.

Matching is greedy one-to-one on embedding similarity with deterministic
tie-breaks; a matched pair only counts as a true positive when the
category labels agree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .consensus import EmbedFn, MergedRequirement, cosine, embed_default
from .errors import EmptyInput, LengthMismatch
from .types import PEGS_ORDER, PegsCategory, Priority, ReqType

DEFAULT_MATCH_THRESHOLD = 0.85


@dataclass(frozen=True)
class GroundTruthItem:
    gt_id: str
    text: str
    req_type: ReqType
    pegs: PegsCategory
    priority: Priority
    doc_id: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("ground truth text must be non-empty")


def load_ground_truth(path: str | Path) -> list[GroundTruthItem]:
    """Read ground truth from line-delimited records (store export fields)."""
    items = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if "export" in obj:  # header record
            continue
        items.append(
            GroundTruthItem(
                gt_id=str(obj.get("gt_id") or obj.get("req_id")),
                text=obj["text"],
                req_type=ReqType.from_text(obj["type"]),
                pegs=PegsCategory.from_text(obj["pegs"]),
                priority=Priority.from_text(obj.get("priority", "medium")),
                doc_id=str(obj.get("doc_id", "")),
            )
        )
    return items


@dataclass
class MatchAssignment:
    """One-to-one assignment between extracted items and ground truth."""

    tp_pairs: list[tuple[GroundTruthItem, MergedRequirement, float]]
    mismatched_pairs: list[tuple[GroundTruthItem, MergedRequirement, float]]
    unmatched_extracted: list[MergedRequirement]
    unmatched_ground_truth: list[GroundTruthItem]

    @property
    def tp(self) -> int:
        return len(self.tp_pairs)

    @property
    def fp(self) -> int:
        # Every extracted item that is not a category-agreeing match.
        return len(self.mismatched_pairs) + len(self.unmatched_extracted)

    @property
    def fn(self) -> int:
        return len(self.mismatched_pairs) + len(self.unmatched_ground_truth)


def match_to_ground_truth(
    extracted: Sequence[MergedRequirement],
    ground_truth: Sequence[GroundTruthItem],
    sim_threshold: float = DEFAULT_MATCH_THRESHOLD,
    embed: EmbedFn = embed_default,
) -> MatchAssignment:
    """Greedy maximum-similarity one-to-one matching.

    Candidate pairs above the similarity threshold are taken best-first
    (ties break by ids, so permuting input order changes nothing). Matched
    pairs with equal categories are true positives; matched pairs with
    different categories burn both sides (a false positive and a false
    negative). Leftovers are false positives / false negatives.
    """
    ext_vecs = [embed(m.text) for m in extracted]
    gt_vecs = [embed(g.text) for g in ground_truth]

    pairs = []
    for gi, g in enumerate(ground_truth):
        for ei, e in enumerate(extracted):
            sim = cosine(gt_vecs[gi], ext_vecs[ei])
            if sim > sim_threshold:
                pairs.append((sim, g.gt_id, e.req_id, gi, ei))
    pairs.sort(key=lambda p: (-p[0], p[1], p[2]))

    used_gt: set[int] = set()
    used_ext: set[int] = set()
    tp_pairs = []
    mismatched = []
    for sim, _, _, gi, ei in pairs:
        if gi in used_gt or ei in used_ext:
            continue
        used_gt.add(gi)
        used_ext.add(ei)
        g, e = ground_truth[gi], extracted[ei]
        if g.pegs is e.pegs:
            tp_pairs.append((g, e, sim))
        else:
            mismatched.append((g, e, sim))

    return MatchAssignment(
        tp_pairs=tp_pairs,
        mismatched_pairs=mismatched,
        unmatched_extracted=[e for i, e in enumerate(extracted) if i not in used_ext],
        unmatched_ground_truth=[g for i, g in enumerate(ground_truth) if i not in used_gt],
    )


def _precision(tp: int, fp: int) -> float:
    return tp / (tp + fp) if (tp + fp) else 1.0


def _recall(tp: int, fn: int) -> float:
    return tp / (tp + fn) if (tp + fn) else 1.0


def _f1(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0


@dataclass
class CategoryCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return _precision(self.tp, self.fp)

    @property
    def recall(self) -> float:
        return _recall(self.tp, self.fn)

    @property
    def f1(self) -> float:
        return _f1(self.precision, self.recall)


@dataclass
class EvalReport:
    per_category: dict[PegsCategory, CategoryCounts]
    overall: CategoryCounts
    pegs_coverage: float
    type_distribution: dict[str, int] = field(default_factory=dict)
    priority_distribution: dict[str, int] = field(default_factory=dict)
    category_distribution: dict[str, int] = field(default_factory=dict)
    total_cost_usd: float | None = None
    cost_per_requirement_usd: float | None = None
    wall_s: float | None = None
    seconds_per_requirement: float | None = None

    def display_precision(self) -> float:
        return round(self.overall.precision, 2)

    def display_recall(self) -> float:
        return round(self.overall.recall, 2)

    def display_f1(self) -> float:
        return round(self.overall.f1, 2)

    def coverage_percent(self) -> float:
        return round(self.pegs_coverage * 100.0, 1)

    def to_obj(self) -> dict:
        return {
            "per_category": {
                cat.value: {
                    "tp": c.tp,
                    "fp": c.fp,
                    "fn": c.fn,
                    "precision": round(c.precision, 4),
                    "recall": round(c.recall, 4),
                    "f1": round(c.f1, 4),
                }
                for cat, c in self.per_category.items()
            },
            "overall": {
                "tp": self.overall.tp,
                "fp": self.overall.fp,
                "fn": self.overall.fn,
                "precision": round(self.overall.precision, 4),
                "recall": round(self.overall.recall, 4),
                "f1": round(self.overall.f1, 4),
            },
            "pegs_coverage": round(self.pegs_coverage, 4),
            "distributions": {
                "type": self.type_distribution,
                "priority": self.priority_distribution,
                "category": self.category_distribution,
            },
            "cost": {
                "total_usd": self.total_cost_usd,
                "per_requirement_usd": self.cost_per_requirement_usd,
            },
            "time": {
                "wall_s": self.wall_s,
                "seconds_per_requirement": self.seconds_per_requirement,
            },
        }


def report_from_counts(
    per_category: Mapping[PegsCategory, tuple[int, int, int]],
    pegs_coverage: float = 0.0,
) -> EvalReport:
    """Build a report straight from (tp, fp, fn) triples per category."""
    cats = {
        cat: CategoryCounts(*per_category.get(cat, (0, 0, 0))) for cat in PEGS_ORDER
    }
    overall = CategoryCounts(
        tp=sum(c.tp for c in cats.values()),
        fp=sum(c.fp for c in cats.values()),
        fn=sum(c.fn for c in cats.values()),
    )
    return EvalReport(per_category=cats, overall=overall, pegs_coverage=pegs_coverage)


def pegs_coverage(merged_by_document: Mapping[str, Sequence[MergedRequirement]]) -> float:
    """Mean per-document fraction of the four categories with >= 1 item."""
    if not merged_by_document:
        return 0.0
    fractions = []
    for merged in merged_by_document.values():
        covered = {m.pegs for m in merged}
        fractions.append(len(covered) / len(PEGS_ORDER))
    return sum(fractions) / len(fractions)


def compute_report(
    extracted: Sequence[MergedRequirement],
    ground_truth: Sequence[GroundTruthItem],
    sim_threshold: float = DEFAULT_MATCH_THRESHOLD,
    total_cost_usd: float | None = None,
    wall_s: float | None = None,
    embed: EmbedFn = embed_default,
) -> EvalReport:
    """Full evaluation of an extraction run against ground truth.

    Per-category counts attribute true positives to the shared category,
    false positives to the extracted item's category and false negatives to
    the ground-truth item's. Coverage is averaged over the union of
    document ids seen on either side.
    """
    assignment = match_to_ground_truth(extracted, ground_truth, sim_threshold, embed)

    cats = {cat: CategoryCounts() for cat in PEGS_ORDER}
    for g, e, _ in assignment.tp_pairs:
        cats[g.pegs].tp += 1
    for g, e, _ in assignment.mismatched_pairs:
        cats[e.pegs].fp += 1
        cats[g.pegs].fn += 1
    for e in assignment.unmatched_extracted:
        cats[e.pegs].fp += 1
    for g in assignment.unmatched_ground_truth:
        cats[g.pegs].fn += 1

    overall = CategoryCounts(
        tp=sum(c.tp for c in cats.values()),
        fp=sum(c.fp for c in cats.values()),
        fn=sum(c.fn for c in cats.values()),
    )

    doc_ids = {m.trace.doc_id for m in extracted} | {g.doc_id for g in ground_truth}
    by_doc = {
        doc_id: [m for m in extracted if m.trace.doc_id == doc_id] for doc_id in doc_ids
    }
    coverage = pegs_coverage(by_doc)

    type_dist: dict[str, int] = {}
    priority_dist: dict[str, int] = {}
    category_dist: dict[str, int] = {}
    for m in extracted:
        type_dist[m.req_type.value] = type_dist.get(m.req_type.value, 0) + 1
        priority_dist[m.priority.value] = priority_dist.get(m.priority.value, 0) + 1
        if m.category_label:
            category_dist[m.category_label] = category_dist.get(m.category_label, 0) + 1

    n = len(extracted)
    return EvalReport(
        per_category=cats,
        overall=overall,
        pegs_coverage=coverage,
        type_distribution=type_dist,
        priority_distribution=priority_dist,
        category_distribution=category_dist,
        total_cost_usd=total_cost_usd,
        cost_per_requirement_usd=(total_cost_usd / n) if (total_cost_usd is not None and n) else None,
        wall_s=wall_s,
        seconds_per_requirement=(wall_s / n) if (wall_s is not None and n) else None,
    )


def cohen_kappa(labels_a: Sequence, labels_b: Sequence) -> float:
    """Chance-corrected agreement between two label sequences.

    kappa = (p_o - p_e) / (1 - p_e) with expected agreement from the
    marginal label distributions; defined as 1.0 in the degenerate case of
    perfect agreement on a single label.
    """
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(
            f"label sequences differ in length: {len(labels_a)} vs {len(labels_b)}"
        )
    if not labels_a:
        raise EmptyInput("need at least one label pair")

    n = len(labels_a)
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n

    counts_a: dict = {}
    counts_b: dict = {}
    for a in labels_a:
        counts_a[a] = counts_a.get(a, 0) + 1
    for b in labels_b:
        counts_b[b] = counts_b.get(b, 0) + 1
    expected = sum(
        (counts_a.get(label, 0) / n) * (counts_b.get(label, 0) / n)
        for label in set(counts_a) | set(counts_b)
    )

    if expected == 1.0:
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1.0 - expected)


@dataclass
class ManualBaseline:
    hourly_rate_usd: float = 60.50
    requirements_per_hour: float = 12.3
    published_cost_per_requirement_usd: float | None = None

    @property
    def cost_per_requirement_usd(self) -> float:
        return self.hourly_rate_usd / self.requirements_per_hour

    @property
    def minutes_per_requirement(self) -> float:
        return 60.0 / self.requirements_per_hour


@dataclass
class CostTimeReport:
    merged_count: int
    engine_cost_per_requirement_usd: float | None
    engine_minutes_per_requirement: float | None
    manual_cost_per_requirement_usd: float
    manual_minutes_per_requirement: float
    manual_published_cost_per_requirement_usd: float | None
    cost_savings_pct: float | None
    time_reduction_pct: float | None

    def to_obj(self) -> dict:
        return {
            "merged_count": self.merged_count,
            "engine": {
                "cost_per_requirement_usd": self.engine_cost_per_requirement_usd,
                "minutes_per_requirement": self.engine_minutes_per_requirement,
            },
            "manual": {
                "cost_per_requirement_usd": round(self.manual_cost_per_requirement_usd, 4),
                "minutes_per_requirement": round(self.manual_minutes_per_requirement, 4),
                "published_cost_per_requirement_usd": self.manual_published_cost_per_requirement_usd,
            },
            "cost_savings_pct": self.cost_savings_pct,
            "time_reduction_pct": self.time_reduction_pct,
        }


def cost_time_report(
    total_cost_usd: float,
    wall_s: float,
    merged_count: int,
    manual: ManualBaseline | None = None,
) -> CostTimeReport:
    """Engine vs manual per-requirement cost and time.

    The manual cost is derived from hourly rate over throughput; a published
    per-requirement figure, when configured, is carried alongside without
    reconciliation. Zero merged requirements yields N/A engine rows.
    """
    manual = manual or ManualBaseline()
    if merged_count:
        engine_cost = total_cost_usd / merged_count
        engine_minutes = wall_s / 60.0 / merged_count
        cost_savings = (
            (1.0 - engine_cost / manual.cost_per_requirement_usd) * 100.0
            if manual.cost_per_requirement_usd
            else None
        )
        time_reduction = (
            (1.0 - engine_minutes / manual.minutes_per_requirement) * 100.0
            if manual.minutes_per_requirement
            else None
        )
    else:
        engine_cost = engine_minutes = cost_savings = time_reduction = None

    return CostTimeReport(
        merged_count=merged_count,
        engine_cost_per_requirement_usd=engine_cost,
        engine_minutes_per_requirement=engine_minutes,
        manual_cost_per_requirement_usd=manual.cost_per_requirement_usd,
        manual_minutes_per_requirement=manual.minutes_per_requirement,
        manual_published_cost_per_requirement_usd=manual.published_cost_per_requirement_usd,
        cost_savings_pct=cost_savings,
        time_reduction_pct=time_reduction,
    )


@dataclass
class AblationDelta:
    precision_delta: float
    recall_delta: float
    f1_delta: float
    coverage_delta_pp: float

    def to_obj(self) -> dict:
        return {
            "precision_delta": self.precision_delta,
            "recall_delta": self.recall_delta,
            "f1_delta": self.f1_delta,
            "coverage_delta_pp": self.coverage_delta_pp,
        }


def ablation_compare(report_guided: EvalReport, report_generic: EvalReport) -> AblationDelta:
    """Absolute deltas (guided minus generic) on the displayed metric values.

    Deltas use the 2-decimal metric / 1-decimal coverage display rounding so
    they line up with reported tables.
    """
    return AblationDelta(
        precision_delta=round(
            report_guided.display_precision() - report_generic.display_precision(), 2
        ),
        recall_delta=round(
            report_guided.display_recall() - report_generic.display_recall(), 2
        ),
        f1_delta=round(report_guided.display_f1() - report_generic.display_f1(), 2),
        coverage_delta_pp=round(
            report_guided.coverage_percent() - report_generic.coverage_percent(), 1
        ),
    )


def calibrate_weights(per_provider_f1: Mapping[str, float]) -> dict[str, float]:
    """Offline weight calibration from standalone F1 scores.

    Weights are F1 normalized to a mean of 1.0, clamped to the allowed
    [0.1, 2.0] band.
    """
    if not per_provider_f1:
        return {}
    mean = sum(per_provider_f1.values()) / len(per_provider_f1)
    out = {}
    for provider_id, f1 in per_provider_f1.items():
        weight = f1 / mean if mean else 1.0
        out[provider_id] = round(min(max(weight, 0.1), 2.0), 4)
    return out
