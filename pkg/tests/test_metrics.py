import itertools
import random

import pytest

from corpus import distinct_requirement_texts
from reqfusion.consensus import MergedRequirement, Trace
from reqfusion.errors import EmptyInput, LengthMismatch
from reqfusion.metrics import (
    AblationDelta,
    ManualBaseline,
    ablation_compare,
    calibrate_weights,
    cohen_kappa,
    compute_report,
    cost_time_report,
    GroundTruthItem,
    match_to_ground_truth,
    pegs_coverage,
    report_from_counts,
)
from reqfusion.types import PEGS_ORDER, PegsCategory, Priority, ReqType


def gt(text, pegs=PegsCategory.SYSTEM, gt_id=None, doc_id="d1", req_type=ReqType.FUNCTIONAL):
    return GroundTruthItem(
        gt_id=gt_id or f"gt-{abs(hash(text)) % 10**6}",
        text=text,
        req_type=req_type,
        pegs=pegs,
        priority=Priority.MEDIUM,
        doc_id=doc_id,
    )


def ext(text, pegs=PegsCategory.SYSTEM, req_id=None, doc_id="d1", req_type=ReqType.FUNCTIONAL):
    return MergedRequirement(
        req_id=req_id or f"req-{abs(hash(text)) % 10**6}",
        text=text,
        req_type=req_type,
        pegs=pegs,
        priority=Priority.MEDIUM,
        category_label="Compliance",
        confidence=1.0,
        contributing_providers=frozenset({"alpha"}),
        flagged_for_review=False,
        trace=Trace(doc_id=doc_id, section_label="Scope", page=1, chunk_id="c0"),
    )


class TestMatching:
    def test_identical_text_same_pegs_is_tp(self):
        text = "The system shall encrypt data at rest."
        assignment = match_to_ground_truth([ext(text)], [gt(text)])
        assert (assignment.tp, assignment.fp, assignment.fn) == (1, 0, 0)

    def test_identical_text_different_pegs_is_fp_plus_fn(self):
        text = "The system shall encrypt data at rest."
        assignment = match_to_ground_truth(
            [ext(text, pegs=PegsCategory.GOALS)], [gt(text, pegs=PegsCategory.SYSTEM)]
        )
        assert (assignment.tp, assignment.fp, assignment.fn) == (0, 1, 1)

    def test_counting_identities(self):
        texts = distinct_requirement_texts(30, seed=5)
        ground_truth = [gt(t, pegs=PEGS_ORDER[i % 4]) for i, t in enumerate(texts[:20])]
        extracted = [ext(t, pegs=PEGS_ORDER[i % 4]) for i, t in enumerate(texts[8:26])]
        a = match_to_ground_truth(extracted, ground_truth)
        assert a.tp + a.fn == len(ground_truth)
        assert a.tp + a.fp == len(extracted)

    def test_permutation_stable(self):
        texts = distinct_requirement_texts(24, seed=6)
        ground_truth = [gt(t, pegs=PEGS_ORDER[i % 4]) for i, t in enumerate(texts[:16])]
        extracted = [ext(t, pegs=PEGS_ORDER[i % 4]) for i, t in enumerate(texts[4:20])]
        base = match_to_ground_truth(extracted, ground_truth)
        rng = random.Random(3)
        for _ in range(5):
            shuffled = extracted[:]
            rng.shuffle(shuffled)
            again = match_to_ground_truth(shuffled, ground_truth)
            assert (again.tp, again.fp, again.fn) == (base.tp, base.fp, base.fn)

    def test_constructed_174_22_26_fixture(self):
        """End-to-end assignment sized to the published error-analysis totals."""
        texts = distinct_requirement_texts(222, seed=7)
        gt_texts, junk_texts = texts[:200], texts[200:]
        ground_truth = [
            gt(t, pegs=PEGS_ORDER[i % 4], gt_id=f"gt-{i:03d}") for i, t in enumerate(gt_texts)
        ]
        extracted = [
            ext(t, pegs=PEGS_ORDER[i % 4], req_id=f"req-{i:03d}")
            for i, t in enumerate(gt_texts[:174])
        ]
        extracted += [
            ext(t, pegs=PEGS_ORDER[i % 4], req_id=f"req-x{i:02d}")
            for i, t in enumerate(junk_texts)
        ]
        report = compute_report(extracted, ground_truth)
        assert (report.overall.tp, report.overall.fp, report.overall.fn) == (174, 22, 26)
        assert report.overall.f1 == pytest.approx(0.8787878787, abs=1e-9)
        assert report.display_f1() == 0.88


class TestReportArithmetic:
    @pytest.mark.parametrize(
        "counts,f1_2dec",
        [
            ((174, 22, 26), 0.88),
            ((38, 4, 5), 0.89),   # Project
            ((31, 7, 9), 0.79),   # Environment
            ((42, 3, 4), 0.92),   # Goals
            ((63, 8, 8), 0.89),   # System
        ],
    )
    def test_published_error_rows(self, counts, f1_2dec):
        report = report_from_counts({PegsCategory.SYSTEM: counts})
        assert round(report.overall.f1, 2) == f1_2dec

    def test_f1_recomputed_from_counts_matches(self):
        for tp, fp, fn in itertools.product(range(0, 40, 7), repeat=3):
            report = report_from_counts({PegsCategory.GOALS: (tp, fp, fn)})
            p, r = report.overall.precision, report.overall.recall
            expected = 2 * p * r / (p + r) if (p + r) else 0.0
            assert abs(report.overall.f1 - expected) < 1e-9

    def test_degenerate_empty_extraction(self):
        ground_truth = [gt("The system shall encrypt data at rest.")]
        report = compute_report([], ground_truth)
        assert report.overall.precision == 1.0  # 0/0 convention
        assert report.overall.recall == 0.0
        assert report.overall.f1 == 0.0

    def test_per_category_sums_equal_overall(self):
        texts = distinct_requirement_texts(24, seed=11)
        ground_truth = [gt(t, pegs=PEGS_ORDER[i % 4]) for i, t in enumerate(texts[:16])]
        extracted = [ext(t, pegs=PEGS_ORDER[(i + 1) % 4]) for i, t in enumerate(texts[6:22])]
        report = compute_report(extracted, ground_truth)
        assert report.overall.tp == sum(c.tp for c in report.per_category.values())
        assert report.overall.fp == sum(c.fp for c in report.per_category.values())
        assert report.overall.fn == sum(c.fn for c in report.per_category.values())


class TestCoverage:
    def test_three_of_four(self):
        merged = [
            ext("The system shall encrypt data at rest.", pegs=PegsCategory.PROJECT),
            ext("Planning effort shall drop by thirty percent.", pegs=PegsCategory.GOALS),
            ext("Order messages shall be exchanged with the ERP.", pegs=PegsCategory.SYSTEM),
        ]
        assert pegs_coverage({"d1": merged}) == pytest.approx(0.75)

    def test_full_coverage_both_documents(self):
        by_doc = {
            doc_id: [
                ext(f"Requirement sentence number {i} for {doc_id}.", pegs=cat, doc_id=doc_id)
                for i, cat in enumerate(PEGS_ORDER)
            ]
            for doc_id in ("d1", "d2")
        }
        assert pegs_coverage(by_doc) == 1.0

    def test_monotone_in_added_requirements(self):
        merged = [ext("The system shall encrypt data at rest.", pegs=PegsCategory.SYSTEM)]
        base = pegs_coverage({"d1": merged})
        more = pegs_coverage(
            {"d1": merged + [ext("Planning effort shall drop.", pegs=PegsCategory.GOALS)]}
        )
        assert more >= base

    def test_empty(self):
        assert pegs_coverage({}) == 0.0
        assert pegs_coverage({"d1": []}) == 0.0


class TestCohenKappa:
    def test_identical_sequences(self):
        labels = ["a", "b", "a", "c", "b"] * 4
        assert cohen_kappa(labels, labels) == 1.0

    def test_back_solved_published_case(self):
        # Binary labels, 50/50 marginals on both sides, observed agreement
        # 0.89: kappa = (0.89 - 0.5) / 0.5 = 0.78.
        a, b = [], []
        a += ["x"] * 89 + ["y"] * 89   # 178 agreements
        b += ["x"] * 89 + ["y"] * 89
        a += ["x"] * 11 + ["y"] * 11   # 22 disagreements, marginals stay 50/50
        b += ["y"] * 11 + ["x"] * 11
        assert len(a) == 200
        assert sum(1 for u, v in zip(a, b) if u == v) / 200 == 0.89
        assert cohen_kappa(a, b) == pytest.approx(0.78, abs=1e-12)

    def test_random_labels_near_zero(self):
        # Monte-Carlo oracle: independent uniform labels have kappa ~ 0.
        rng = random.Random(42)
        n = 60_000
        a = [rng.randrange(4) for _ in range(n)]
        b = [rng.randrange(4) for _ in range(n)]
        assert abs(cohen_kappa(a, b)) < 0.1

    def test_symmetry(self):
        rng = random.Random(9)
        a = [rng.randrange(3) for _ in range(500)]
        b = [rng.randrange(3) for _ in range(500)]
        assert cohen_kappa(a, b) == pytest.approx(cohen_kappa(b, a), abs=1e-12)

    def test_relabeling_invariance(self):
        rng = random.Random(10)
        a = [rng.randrange(3) for _ in range(500)]
        b = [rng.randrange(3) for _ in range(500)]
        mapping = {0: "p", 1: "q", 2: "r"}
        assert cohen_kappa(a, b) == pytest.approx(
            cohen_kappa([mapping[x] for x in a], [mapping[x] for x in b]), abs=1e-12
        )

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            cohen_kappa([1, 2], [1])
        with pytest.raises(EmptyInput):
            cohen_kappa([], [])


class TestCostTime:
    def test_manual_baseline_arithmetic(self):
        manual = ManualBaseline()
        assert manual.cost_per_requirement_usd == pytest.approx(60.50 / 12.3)
        assert manual.cost_per_requirement_usd == pytest.approx(4.9187, abs=1e-4)
        # 60 / 12.3 = 4.878 minutes, displayed as the published "4.9 min".
        assert round(manual.minutes_per_requirement, 1) == 4.9

    def test_engine_vs_manual(self):
        report = cost_time_report(total_cost_usd=4.3, wall_s=6600.0, merged_count=100)
        assert report.engine_cost_per_requirement_usd == pytest.approx(0.043)
        assert report.cost_savings_pct is not None and report.cost_savings_pct > 99.0
        assert report.manual_published_cost_per_requirement_usd is None

    def test_published_manual_cost_carried_unreconciled(self):
        manual = ManualBaseline(published_cost_per_requirement_usd=0.082)
        report = cost_time_report(1.0, 60.0, 10, manual)
        assert report.manual_published_cost_per_requirement_usd == 0.082
        assert report.manual_cost_per_requirement_usd == pytest.approx(4.9187, abs=1e-4)

    def test_zero_requirements_not_applicable(self):
        report = cost_time_report(1.0, 60.0, 0)
        assert report.engine_cost_per_requirement_usd is None
        assert report.time_reduction_pct is None


class TestAblationCompare:
    def test_pinned_published_deltas(self):
        guided = report_from_counts(
            {
                PegsCategory.PROJECT: (38, 4, 5),
                PegsCategory.ENVIRONMENT: (31, 7, 9),
                PegsCategory.GOALS: (42, 3, 4),
                PegsCategory.SYSTEM: (63, 8, 8),
            },
            pegs_coverage=0.92,
        )
        generic = report_from_counts(
            {PegsCategory.SYSTEM: (136, 48, 64)}, pegs_coverage=0.613
        )
        assert (guided.display_precision(), guided.display_recall(), guided.display_f1()) == (
            0.89, 0.87, 0.88,
        )
        assert (generic.display_precision(), generic.display_recall(), generic.display_f1()) == (
            0.74, 0.68, 0.71,
        )
        delta = ablation_compare(guided, generic)
        assert delta == AblationDelta(
            precision_delta=0.15, recall_delta=0.19, f1_delta=0.17, coverage_delta_pp=30.7
        )

    def test_identical_reports_zero_delta(self):
        report = report_from_counts({PegsCategory.SYSTEM: (10, 2, 3)}, pegs_coverage=0.5)
        delta = ablation_compare(report, report)
        assert delta == AblationDelta(0.0, 0.0, 0.0, 0.0)


class TestCalibrateWeights:
    def test_normalized_and_clamped(self):
        weights = calibrate_weights({"a": 0.81, "b": 0.83, "c": 0.74})
        assert weights["b"] > weights["a"] > weights["c"]
        mean = sum(weights.values()) / 3
        assert mean == pytest.approx(1.0, abs=0.01)
        for w in weights.values():
            assert 0.1 <= w <= 2.0

    def test_extreme_scores_clamped(self):
        weights = calibrate_weights({"good": 0.9, "awful": 0.01})
        assert weights["awful"] >= 0.1
        assert weights["good"] <= 2.0

    def test_empty(self):
        assert calibrate_weights({}) == {}
