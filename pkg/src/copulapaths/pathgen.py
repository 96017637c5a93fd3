"""Sample-path generation: naive independent, copula-based, autoregressive.

All three methods share the same marginal machinery (quantile knots fitted
into invertible CDFs) and differ only in how they couple the horizons:

* naive        -- independent uniform per horizon; 1 forward pass.
* copula       -- correlated uniforms from a Gaussian copula; 1 forward pass.
* autoregressive -- sample one step, append it to the context, re-forecast;
                    exactly N * H forward passes.

Noise is consumed path-major, horizon-minor, and the naive method draws
through an identity copula factor, so a zero-correlation copula reproduces
naive output bit for bit under the same seed.
"""

import hashlib
import time
from dataclasses import dataclass

import numpy as np

from .copula import CholeskyFactor, CopulaParams, cholesky_for, sample_copula_uniforms
from .errors import HorizonMismatch
from .forecasters import ForecastRequest, MultiStepForecast, forecast
from .iqf import (
    DEFAULT_LEVELS,
    MarginalDistribution,
    _fit_shared_arrays,
    _invert_columns,
    fit_iqf,
    fit_iqf_shared,
    quantile,
    quantile_matrix,
)


@dataclass(frozen=True, slots=True)
class SamplePaths:
    """N x H matrix of generated trajectories plus generation metadata."""

    paths: np.ndarray
    method: str
    seed: int
    forward_passes: int
    wall_time: float

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    @property
    def horizon(self) -> int:
        return self.paths.shape[1]


def derive_seed(seed: int, label: str) -> int:
    """Stable per-label sub-seed: seed XOR the first 8 bytes of sha256(label)."""
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return (int(seed) ^ int.from_bytes(digest[:8], "big")) & 0xFFFFFFFFFFFFFFFF


def _shared_levels(fc: MultiStepForecast):
    levels = fc.per_horizon[0].levels
    for k in fc.per_horizon[1:]:
        if k.levels is not levels and not np.array_equal(k.levels, levels):
            return None
    return levels


def fit_marginals(fc: MultiStepForecast, nonneg: bool) -> list[MarginalDistribution]:
    """Fit one invertible marginal per horizon of a multi-step forecast."""
    levels = _shared_levels(fc)
    if levels is None:
        return [fit_iqf(k, nonneg) for k in fc.per_horizon]
    return fit_iqf_shared(
        levels, np.stack([k.values for k in fc.per_horizon]), nonneg
    )


def _sample_through_marginals(
    fc: MultiStepForecast, nonneg: bool, u: np.ndarray
) -> np.ndarray:
    """Fit marginals and invert the uniform matrix in one array pass.

    u comes from sample_copula_uniforms and is already clipped inside (0, 1).
    """
    levels = _shared_levels(fc)
    if levels is None:
        return quantile_matrix(fit_marginals(fc, nonneg), u)
    values_mat = np.stack([k.values for k in fc.per_horizon])
    rep, s_l, s_r, _p0 = _fit_shared_arrays(levels, values_mat, nonneg)
    return _invert_columns(levels, rep, s_l, s_r, nonneg, u)


def generate_naive(
    fc: MultiStepForecast, n_paths: int, seed: int, nonneg: bool = True
) -> SamplePaths:
    """Independent sampling from the per-horizon marginals."""
    t0 = time.perf_counter()
    h = fc.horizon
    identity = CholeskyFactor(dim=h, lower=np.eye(h))
    u = sample_copula_uniforms(identity, n_paths, seed)
    paths = _sample_through_marginals(fc, nonneg, u)
    return SamplePaths(
        paths=paths,
        method="naive",
        seed=seed,
        forward_passes=fc.forward_passes_consumed,
        wall_time=time.perf_counter() - t0,
    )


def generate_copula(
    fc: MultiStepForecast,
    params: CopulaParams,
    n_paths: int,
    seed: int,
    nonneg: bool = True,
) -> SamplePaths:
    """Correlated sampling: copula uniforms mapped through the marginals."""
    t0 = time.perf_counter()
    if params.horizon != fc.horizon:
        raise HorizonMismatch(
            f"copula horizon {params.horizon} != forecast horizon {fc.horizon}"
        )
    factor = cholesky_for(params)
    u = sample_copula_uniforms(factor, n_paths, seed)
    paths = _sample_through_marginals(fc, nonneg, u)
    return SamplePaths(
        paths=paths,
        method="copula",
        seed=seed,
        forward_passes=fc.forward_passes_consumed,
        wall_time=time.perf_counter() - t0,
    )


def generate_autoregressive(
    handle,
    context,
    horizon: int,
    n_paths: int,
    seed: int,
    nonneg: bool = True,
    levels: tuple = DEFAULT_LEVELS,
    series_id: str | None = None,
    exact: bool = False,
) -> SamplePaths:
    """One-step-at-a-time sampling with context feedback.

    Each path re-forecasts after every sampled step, so exactly
    ``n_paths * horizon`` forward passes are consumed.  With ``exact`` the
    step value comes from the handle's exact one-step conditional instead
    of the fitted marginal (oracle experiments on unbounded series only).

    For external stores, per-path lookups use series ids suffixed
    ``#p<n>`` so pre-materialized traces can be replayed; the per-path
    noise stream is seeded by ``derive_seed(derive_seed(seed, sid), "p<n>")``.
    """
    t0 = time.perf_counter()
    if exact:
        if not getattr(handle, "supports_exact", False):
            raise ValueError(f"forecaster {handle.kind!r} has no exact conditionals")
        if nonneg:
            raise ValueError("exact conditionals are unbounded; use nonneg=False")
    context = np.asarray(context, dtype=float)
    t_len = context.size
    paths = np.empty((n_paths, horizon))
    base = derive_seed(seed, series_id or "")
    calls = 0
    buf = np.empty(t_len + horizon)
    buf[:t_len] = context
    for n in range(n_paths):
        rng = np.random.default_rng(derive_seed(base, f"p{n}"))
        sid = f"{series_id}#p{n}" if series_id is not None else None
        for i in range(horizon):
            ctx = buf[: t_len + i]
            u = min(max(rng.random(), 1e-12), 1.0 - 1e-12)
            fc = forecast(
                handle, ForecastRequest(ctx, horizon=1, levels=levels, series_id=sid)
            )
            calls += 1
            if exact:
                x = float(handle.one_step_quantile(ctx, u))
            else:
                dist = fit_iqf(fc.per_horizon[0], nonneg)
                x = quantile(dist, u)
            buf[t_len + i] = x
            paths[n, i] = x
    return SamplePaths(
        paths=paths,
        method="autoregressive",
        seed=seed,
        forward_passes=calls,
        wall_time=time.perf_counter() - t0,
    )
