"""Scoring tests: CRPS/VS against brute-force oracles and closed forms,
plus the normalization and per-horizon aggregation protocol."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from copulapaths import (
    ScoreReport,
    SeriesScores,
    crps,
    crps_point,
    normalize_and_aggregate,
    pct_improvement_by_horizon,
    variogram_score,
)
from copulapaths.errors import (
    HorizonMismatch,
    NoComparableSeries,
    TooFewPaths,
)


def crps_brute(paths: np.ndarray, observed: np.ndarray):
    """O(N^2) double-loop reference implementation of the unbiased estimator."""
    n, h = paths.shape
    out = np.zeros(h)
    for i in range(h):
        term1 = np.mean(np.abs(paths[:, i] - observed[i]))
        pair = 0.0
        for a in range(n):
            for b in range(n):
                if a != b:
                    pair += abs(paths[a, i] - paths[b, i])
        out[i] = term1 - pair / (2.0 * n * (n - 1.0))
    return out.sum(), out


def vs_brute(paths: np.ndarray, observed: np.ndarray, p: float = 0.5) -> float:
    """Direct double sum over horizon pairs with an ensemble-mean expectation."""
    n, h = paths.shape
    total = 0.0
    for i in range(h):
        for j in range(h):
            expected = np.mean(np.abs(paths[:, i] - paths[:, j]) ** p)
            total += (abs(observed[i] - observed[j]) ** p - expected) ** 2
    return total


class TestCrps:
    def test_perfect_deterministic_ensemble(self):
        obs = np.array([1.0, 2.0, 3.0])
        paths = np.tile(obs, (5, 1))
        total, by_h = crps(paths, obs)
        assert total == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(by_h, 0.0, atol=1e-12)

    def test_constant_ensemble_reduces_to_abs_error(self):
        obs = np.array([1.0, 5.0])
        paths = np.tile([2.0, 3.0], (8, 1))
        total, by_h = crps(paths, obs)
        assert np.allclose(by_h, [1.0, 2.0], atol=1e-12)
        assert total == pytest.approx(3.0, abs=1e-12)

    def test_gaussian_closed_form(self):
        # CRPS of a standard normal forecast at the observation 0
        expected = 2.0 / math.sqrt(2.0 * math.pi) - 1.0 / math.sqrt(math.pi)
        rng = np.random.default_rng(17)
        paths = rng.standard_normal((100_000, 3))
        total, by_h = crps(paths, np.zeros(3))
        assert np.max(np.abs(by_h - expected)) < 0.005

    def test_sorted_matches_brute_force(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            n = int(rng.integers(2, 25))
            h = int(rng.integers(1, 6))
            paths = rng.normal(0, 10, (n, h))
            obs = rng.normal(0, 10, h)
            fast_total, fast_h = crps(paths, obs)
            slow_total, slow_h = crps_brute(paths, obs)
            assert np.max(np.abs(fast_h - slow_h)) < 1e-10
            assert fast_total == pytest.approx(slow_total, abs=1e-10)

    def test_too_few_paths(self):
        with pytest.raises(TooFewPaths):
            crps(np.array([[1.0, 2.0]]), np.array([1.0, 2.0]))

    def test_horizon_mismatch(self):
        with pytest.raises(HorizonMismatch):
            crps(np.zeros((3, 4)), np.zeros(5))

    def test_non_negative_random(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            paths = rng.normal(0, 5, (12, 4))
            obs = rng.normal(0, 5, 4)
            total, by_h = crps(paths, obs)
            assert total >= -1e-12
            assert np.all(by_h >= -1e-12)

    def test_true_distribution_beats_shifted(self):
        # ensembles from the data-generating law should outscore a
        # mean-shifted copy almost always
        rng = np.random.default_rng(99)
        wins = 0
        trials = 500
        for _ in range(trials):
            obs = rng.standard_normal(8)
            true_paths = rng.standard_normal((200, 8))
            shifted_paths = rng.standard_normal((200, 8)) + 2.0
            if crps(true_paths, obs)[0] <= crps(shifted_paths, obs)[0]:
                wins += 1
        assert wins / trials >= 0.99


class TestCrpsPoint:
    def test_mae_reduction(self):
        total, by_h = crps_point([1.0, 2.0], [3.0, 1.0])
        assert np.allclose(by_h, [2.0, 1.0])
        assert total == 3.0


class TestVariogramScore:
    def test_single_path_equal_observed(self):
        obs = np.array([1.0, 4.0, 2.0])
        assert variogram_score(obs.reshape(1, -1), obs) == pytest.approx(0.0, abs=1e-12)

    def test_two_horizon_hand_example(self):
        # (|0-4|^.5 - |0-1|^.5)^2 summed over (i,j) and (j,i)
        score = variogram_score(np.array([[0.0, 1.0]]), np.array([0.0, 4.0]))
        assert score == pytest.approx(2.0, abs=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            n = int(rng.integers(1, 21))
            h = int(rng.integers(2, 7))
            paths = rng.normal(0, 3, (n, h))
            obs = rng.normal(0, 3, h)
            assert variogram_score(paths, obs) == pytest.approx(
                vs_brute(paths, obs), abs=1e-10
            )

    def test_chunked_equals_unchunked(self):
        rng = np.random.default_rng(22)
        paths = rng.normal(0, 1, (5000, 6))
        obs = rng.normal(0, 1, 6)
        a = variogram_score(paths, obs, chunk=128)
        b = variogram_score(paths, obs, chunk=10**6)
        assert a == pytest.approx(b, rel=1e-12)

    def test_horizon_mismatch(self):
        with pytest.raises(HorizonMismatch):
            variogram_score(np.zeros((3, 4)), np.zeros(3))

    def test_correct_dependence_scores_better(self):
        # an independent ensemble overstates pair dispersion relative to a
        # strongly correlated truth
        rng = np.random.default_rng(30)
        h = 6
        rho = 0.9
        corr = rho ** np.abs(np.subtract.outer(np.arange(h), np.arange(h)))
        lower = np.linalg.cholesky(corr)
        wins = 0
        for _ in range(100):
            obs = lower @ rng.standard_normal(h)
            dep = rng.standard_normal((500, h)) @ lower.T
            indep = rng.standard_normal((500, h))
            if variogram_score(dep, obs) <= variogram_score(indep, obs):
                wins += 1
        assert wins >= 85


class TestScaleEquivariance:
    @given(st.floats(0.01, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_crps_and_vs_scale_linearly(self, c):
        rng = np.random.default_rng(12)
        paths = rng.normal(10, 2, (30, 5))
        obs = rng.normal(10, 2, 5)
        base_crps = crps(paths, obs)[0]
        base_vs = variogram_score(paths, obs)
        assert crps(c * paths, c * obs)[0] == pytest.approx(c * base_crps, rel=1e-9)
        assert variogram_score(c * paths, c * obs) == pytest.approx(
            c * base_vs, rel=1e-9
        )


def _scores(crps_val, vs_val, by_h=None):
    return SeriesScores(
        crps_total=crps_val,
        vs_total=vs_val,
        crps_by_horizon=np.asarray(by_h if by_h is not None else [crps_val]),
    )


class TestNormalizeAndAggregate:
    def test_equal_scores_normalize_to_one(self):
        per = {s: _scores(2.0, 4.0) for s in "abc"}
        base = {s: _scores(2.0, 4.0) for s in "abc"}
        agg = normalize_and_aggregate(per, base)
        assert agg.median_crps == 1.0
        assert agg.median_vs == 1.0

    def test_median_over_series(self):
        per = {"a": _scores(0.5, 1.0), "b": _scores(1.0, 1.0), "c": _scores(2.0, 1.0)}
        base = {s: _scores(1.0, 1.0) for s in "abc"}
        assert normalize_and_aggregate(per, base).median_crps == 1.0

    def test_zero_baseline_dropped(self, caplog):
        per = {"a": _scores(1.0, 1.0), "b": _scores(1.0, 1.0)}
        base = {"a": _scores(0.0, 1.0), "b": _scores(2.0, 1.0)}
        with caplog.at_level("WARNING"):
            agg = normalize_and_aggregate(per, base)
        assert agg.dropped_series == 1
        assert agg.median_crps == 0.5

    def test_disjoint_series_error(self):
        with pytest.raises(NoComparableSeries):
            normalize_and_aggregate({"a": _scores(1, 1)}, {"b": _scores(1, 1)})


class TestScoreReport:
    def test_rows_flatten_per_series_and_method(self):
        s = _scores(1.0, 2.0, by_h=[0.4, 0.6])
        report = ScoreReport(
            per_series={
                "naive": {"A": {"scores": s, "normalized_crps": 0.5,
                                "normalized_vs": 0.25}},
                "copula": {"A": {"scores": s}},
            },
            aggregates={"methods": {}},
        )
        rows = report.rows()
        assert len(rows) == 2
        by_method = {r["method"]: r for r in rows}
        assert by_method["naive"]["normalized_crps"] == 0.5
        assert by_method["copula"]["normalized_crps"] == ""
        assert by_method["naive"]["crps_by_horizon"] == [0.4, 0.6]


class TestPctImprovement:
    def test_simple_values(self):
        a = {"s": np.array([2.0, 2.0])}
        b = {"s": np.array([1.5, 2.0])}
        out = pct_improvement_by_horizon(a, b)
        assert out[0] == pytest.approx(25.0)
        assert out[1] == pytest.approx(0.0)

    def test_equal_methods_zero_everywhere(self):
        a = {s: np.array([1.0, 2.0, 3.0]) for s in "xyz"}
        out = pct_improvement_by_horizon(a, dict(a))
        assert np.allclose(out, 0.0)

    def test_zero_cells_excluded(self):
        a = {"s1": np.array([0.0, 2.0]), "s2": np.array([4.0, 2.0])}
        b = {"s1": np.array([1.0, 1.0]), "s2": np.array([2.0, 1.0])}
        out = pct_improvement_by_horizon(a, b)
        assert out[0] == pytest.approx(50.0)  # only s2 contributes
        assert out[1] == pytest.approx(50.0)

    def test_median_across_series(self):
        a = {f"s{i}": np.array([2.0]) for i in range(3)}
        b = {"s0": np.array([1.0]), "s1": np.array([1.5]), "s2": np.array([2.0])}
        assert pct_improvement_by_horizon(a, b)[0] == pytest.approx(25.0)
