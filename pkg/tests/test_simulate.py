import pytest

from reqfusion import consensus
from reqfusion.errors import InvalidRate
from reqfusion.simulate import (
    SimulationParams,
    expected_event_volume,
    simulate_hallucination,
)


def calibrated_overlap(n=12, k=3, p=0.8, f=0.34, target=0.08) -> float:
    """Brute-force search of the binomial agreement model for the overlap
    value whose expected confirmed-FP rate hits the target."""

    def confirmed_fp(omega: float) -> float:
        r1 = n * k * p * (1 - p) ** (k - 1)
        r2plus = n * (1 - (1 - p) ** k - k * p * (1 - p) ** (k - 1))
        h1 = f / (1 - f) * r1
        h2 = (h1 / (1 - omega)) * omega
        return h2 / (h2 + r2plus)

    grid = [i / 1000 for i in range(5, 996, 5)]
    return min(grid, key=lambda w: abs(confirmed_fp(w) - target))


class TestValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"fp_rate_single": -0.1},
            {"fp_rate_single": 1.2},
            {"overlap_rate": 1.5},
            {"trials": 0},
            {"n_providers": 1},
            {"overlap_rate": 1.0, "fp_rate_single": 0.34},
        ],
    )
    def test_invalid_params(self, kwargs):
        with pytest.raises(InvalidRate):
            SimulationParams(**kwargs).validate()

    def test_valid_defaults(self):
        SimulationParams().validate()


class TestStructuralZero:
    def test_no_overlap_means_no_confirmed_false_positives(self):
        params = SimulationParams(overlap_rate=0.0, trials=400, seed=3)
        report = simulate_hallucination(params)
        assert report.confirmed.numerator == 0
        assert report.confirmed.denominator > 0

    def test_zero_fp_rate_means_no_hallucinations(self):
        params = SimulationParams(fp_rate_single=0.0, overlap_rate=0.5, trials=100, seed=3)
        assert expected_event_volume(params) == 0.0
        report = simulate_hallucination(params)
        assert report.singleton.numerator == 0
        assert report.flagged.numerator == 0


class TestDeterminism:
    def test_fixed_seed_reproduces_report(self):
        params = SimulationParams(overlap_rate=0.5, trials=300, seed=11)
        assert simulate_hallucination(params).to_obj() == simulate_hallucination(params).to_obj()

    def test_different_seed_differs(self):
        a = simulate_hallucination(SimulationParams(overlap_rate=0.5, trials=300, seed=1))
        b = simulate_hallucination(SimulationParams(overlap_rate=0.5, trials=300, seed=2))
        assert a.to_obj() != b.to_obj()


class TestProductionPathProbe:
    def test_simulation_calls_production_merge(self, monkeypatch):
        calls = {"n": 0}
        real_merge = consensus.merge

        def probe(*args, **kwargs):
            calls["n"] += 1
            return real_merge(*args, **kwargs)

        monkeypatch.setattr(consensus, "merge", probe)
        trials = 25
        simulate_hallucination(SimulationParams(overlap_rate=0.3, trials=trials, seed=5))
        assert calls["n"] == trials


class TestCalibratedShape:
    def test_confirmed_rate_tracks_calibration(self):
        omega = calibrated_overlap()
        params = SimulationParams(
            fp_rate_single=0.34, overlap_rate=omega, trials=2500, seed=7
        )
        report = simulate_hallucination(params)
        assert report.confirmed.rate == pytest.approx(0.08, abs=0.02)
        assert report.singleton.rate == pytest.approx(0.34, abs=0.04)
        lo, hi = report.confirmed.ci95
        assert lo <= report.confirmed.rate <= hi

    def test_more_overlap_more_confirmed_fp(self):
        low = simulate_hallucination(
            SimulationParams(overlap_rate=0.2, trials=800, seed=13)
        )
        high = simulate_hallucination(
            SimulationParams(overlap_rate=0.8, trials=800, seed=13)
        )
        assert high.confirmed.rate > low.confirmed.rate
