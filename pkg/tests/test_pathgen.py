"""Sample-path generator tests: determinism, cost accounting, dependence
structure, marginal preservation."""

import numpy as np
import pytest

from copulapaths import (
    FORWARD_PASSES,
    BiasedDriftForecaster,
    CopulaParams,
    ForecastRequest,
    GaussianAR1Forecaster,
    SeasonalNaiveForecaster,
    derive_seed,
    fit_marginals,
    forecast,
    generate_autoregressive,
    generate_copula,
    generate_naive,
    norm_inv_cdf,
    quantile,
)
from copulapaths.errors import HorizonMismatch
from copulapaths.iqf import cdf as iqf_cdf

Z_SPAN = norm_inv_cdf(0.9) - norm_inv_cdf(0.1)


def ar1_forecast(phi=0.8, sigma=1.0, mu=0.0, x_t=2.0, horizon=8):
    handle = GaussianAR1Forecaster(phi=phi, sigma=sigma, mu=mu)
    return handle, forecast(handle, ForecastRequest([x_t], horizon=horizon))


def gaussianize(paths, dists):
    cols = []
    for i, d in enumerate(dists):
        u = np.clip(iqf_cdf(d, paths[:, i]), 1e-12, 1 - 1e-12)
        cols.append(norm_inv_cdf(u))
    return np.column_stack(cols)


class TestNaive:
    def test_degenerate_marginal(self):
        handle = SeasonalNaiveForecaster(season_length=1)
        fc = forecast(handle, ForecastRequest([7.0], horizon=3))
        sp = generate_naive(fc, 200, seed=1)
        assert np.all(np.abs(sp.paths - 7.0) < 1e-6)

    def test_determinism(self):
        _, fc = ar1_forecast()
        a = generate_naive(fc, 50, seed=9, nonneg=False)
        b = generate_naive(fc, 50, seed=9, nonneg=False)
        assert np.array_equal(a.paths, b.paths)

    def test_forward_pass_accounting(self):
        _, fc = ar1_forecast(horizon=14)
        sp = generate_naive(fc, 100, seed=2, nonneg=False)
        assert sp.forward_passes == 1

    def test_wall_time_recorded(self):
        _, fc = ar1_forecast()
        sp = generate_naive(fc, 10, seed=2, nonneg=False)
        assert sp.wall_time > 0.0


class TestCopula:
    def test_zero_rho_equals_naive_bitwise(self):
        _, fc = ar1_forecast()
        naive = generate_naive(fc, 128, seed=42, nonneg=False)
        cop = generate_copula(
            fc, CopulaParams(rho=0.0, horizon=8), 128, seed=42, nonneg=False
        )
        assert np.array_equal(naive.paths, cop.paths)

    def test_horizon_mismatch(self):
        _, fc = ar1_forecast(horizon=8)
        with pytest.raises(HorizonMismatch):
            generate_copula(fc, CopulaParams(rho=0.5, horizon=5), 10, seed=1)

    def test_near_unit_rho_pins_paths_to_one_level(self):
        handle = GaussianAR1Forecaster(phi=0.9, sigma=5.0, mu=50.0)
        fc = forecast(handle, ForecastRequest(np.full(30, 50.0), horizon=4))
        sp = generate_copula(fc, CopulaParams(rho=0.999, horizon=4), 5000, seed=11)
        z = gaussianize(sp.paths, fit_marginals(fc, True))
        spread = z.max(axis=1) - z.min(axis=1)
        assert (spread < 0.2).mean() >= 0.95

    def test_gaussianized_correlation_matches_copula_target(self):
        phi = 0.8
        _, fc = ar1_forecast(phi=phi)
        sp = generate_copula(
            fc, CopulaParams(rho=phi, horizon=8), 100_000, seed=5, nonneg=False
        )
        z = gaussianize(sp.paths, fit_marginals(fc, False))
        target = phi ** np.abs(np.subtract.outer(np.arange(8), np.arange(8)))
        assert np.max(np.abs(np.corrcoef(z.T) - target)) < 0.02

    def test_forward_pass_accounting(self):
        _, fc = ar1_forecast()
        sp = generate_copula(
            fc, CopulaParams(rho=0.5, horizon=8), 100, seed=2, nonneg=False
        )
        assert sp.forward_passes == 1

    def test_beta_mixture_runs_through_dense_factor(self):
        _, fc = ar1_forecast()
        sp = generate_copula(
            fc, CopulaParams(rho=0.8, horizon=8, beta=0.2), 500, seed=3, nonneg=False
        )
        assert np.all(np.isfinite(sp.paths))


def ar1_joint_correlation(phi: float, horizon: int) -> np.ndarray:
    """Correlation of (x_{T+1}, ..., x_{T+H}) given x_T for a unit AR(1)."""
    i = np.arange(1, horizon + 1, dtype=float)
    var = (1.0 - phi ** (2 * i)) / (1.0 - phi * phi)
    cov = np.empty((horizon, horizon))
    for a in range(horizon):
        for b in range(horizon):
            cov[a, b] = phi ** abs(a - b) * var[min(a, b)]
    return cov / np.sqrt(np.outer(var, var))


class TestAutoregressive:
    def test_forward_pass_accounting(self):
        handle = GaussianAR1Forecaster(phi=0.8, sigma=1.0)
        FORWARD_PASSES.reset()
        sp = generate_autoregressive(handle, [2.0], 14, 10, seed=1, nonneg=False)
        assert sp.forward_passes == 140
        assert FORWARD_PASSES.value == 140

    def test_determinism(self):
        handle = GaussianAR1Forecaster(phi=0.8, sigma=1.0)
        a = generate_autoregressive(handle, [2.0], 6, 20, seed=3, nonneg=False)
        b = generate_autoregressive(handle, [2.0], 6, 20, seed=3, nonneg=False)
        assert np.array_equal(a.paths, b.paths)

    def test_exact_conditionals_match_analytic_joint(self):
        phi = 0.8
        handle = GaussianAR1Forecaster(phi=phi, sigma=1.0, mu=0.0)
        sp = generate_autoregressive(
            handle, [2.0], 8, 100_000, seed=5, nonneg=False, exact=True
        )
        emp = np.corrcoef(sp.paths.T)
        assert np.max(np.abs(emp - ar1_joint_correlation(phi, 8))) < 0.02

    def test_bias_compounds_multiplicatively(self):
        # medians at horizon 14 should differ by about b^14
        inner = GaussianAR1Forecaster(phi=0.8, sigma=1.0, mu=0.0)
        biased = BiasedDriftForecaster(inner, bias=1.02)
        sp_b = generate_autoregressive(biased, [100.0], 14, 4000, 3, nonneg=False)
        sp_u = generate_autoregressive(inner, [100.0], 14, 4000, 3, nonneg=False)
        ratio = np.median(sp_b.paths[:, 13]) / np.median(sp_u.paths[:, 13])
        assert ratio - 1.0 == pytest.approx(1.02**14 - 1.0, abs=0.03)

    def test_exact_requires_unbounded(self):
        handle = GaussianAR1Forecaster(phi=0.8, sigma=1.0)
        with pytest.raises(ValueError):
            generate_autoregressive(handle, [2.0], 3, 2, seed=1, nonneg=True, exact=True)


class TestMarginalPreservation:
    def test_copula_preserves_marginals(self):
        # per-horizon mean absolute deviation of the 9 empirical deciles from
        # the fitted marginal, in units of the marginal's 10-90 span / z-span
        levels = np.arange(1, 10) * 0.1
        _, fc = ar1_forecast()
        dists = fit_marginals(fc, False)
        for rho in (0.0, 0.6, 0.9):
            sp = generate_copula(
                fc, CopulaParams(rho=rho, horizon=8), 100_000, seed=13, nonneg=False
            )
            for i, d in enumerate(dists):
                emp_q = np.quantile(sp.paths[:, i], levels)
                fit_q = quantile(d, levels)
                scale = (quantile(d, 0.9) - quantile(d, 0.1)) / Z_SPAN
                assert np.mean(np.abs(emp_q - fit_q)) / scale < 0.01


class TestNonNegativity:
    def test_all_methods_respect_support(self):
        handle = GaussianAR1Forecaster(phi=0.6, sigma=30.0, mu=10.0)
        ctx = np.full(20, 10.0)
        fc = forecast(handle, ForecastRequest(ctx, horizon=6))
        assert generate_naive(fc, 3000, seed=1).paths.min() >= 0.0
        sp = generate_copula(fc, CopulaParams(rho=0.6, horizon=6), 3000, seed=1)
        assert sp.paths.min() >= 0.0
        ar = generate_autoregressive(handle, ctx, 6, 50, seed=1)
        assert ar.paths.min() >= 0.0


class TestDeriveSeed:
    def test_stable_and_distinct(self):
        a = derive_seed(42, "series-1")
        assert a == derive_seed(42, "series-1")
        assert a != derive_seed(42, "series-2")
        assert a != derive_seed(43, "series-1")
        assert 0 <= a < 2**64
