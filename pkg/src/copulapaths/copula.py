"""Gaussian copula machinery.

Covers the AR(1) Toeplitz correlation structure (optionally mixed with a
diagonal via a ``beta`` weight), its Cholesky factors (closed form for the
pure AR(1) case, dense factorization otherwise), the standard-normal CDF
and inverse CDF used for the probability-integral transforms, correlated
uniform sampling, and lag-1 autocorrelation estimation.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import (
    EmptyHorizon,
    InvalidProbability,
    NotPositiveDefinite,
    SeriesTooShort,
)

RHO_MAX = 0.999


@dataclass(frozen=True, slots=True)
class CopulaParams:
    """Correlation parameters of the Gaussian copula.

    ``rho`` is clamped into [-0.999, 0.999] so the implied covariance stays
    positive definite.  ``beta`` (if given) mixes the AR(1) structure with
    the identity: ``sigma_ij = (1 - beta) * rho^|i-j| + beta * 1[i == j]``.
    """

    rho: float
    horizon: int
    beta: float | None = None

    def __post_init__(self):
        rho = float(np.clip(self.rho, -RHO_MAX, RHO_MAX))
        object.__setattr__(self, "rho", rho)
        if self.beta is not None:
            beta = float(self.beta)
            if not 0.0 <= beta <= 1.0:
                raise ValueError(f"beta must lie in [0, 1], got {beta}")
            object.__setattr__(self, "beta", beta)
        if self.horizon < 1:
            raise EmptyHorizon("horizon must be at least 1")


@dataclass(frozen=True, slots=True)
class CholeskyFactor:
    """Lower-triangular factor L with L @ L.T equal to the covariance."""

    dim: int
    lower: np.ndarray


def build_covariance(params: CopulaParams) -> np.ndarray:
    """Toeplitz correlation matrix implied by ``params``.

    Unit diagonal in both parameterizations; the Kronecker delta restores
    the diagonal that the ``(1 - beta)`` damping removes.
    """
    h = params.horizon
    if h < 1:
        raise EmptyHorizon("horizon must be at least 1")
    lags = np.abs(np.subtract.outer(np.arange(h), np.arange(h)))
    sigma = np.power(params.rho, lags, dtype=float)
    if params.beta is not None:
        sigma = (1.0 - params.beta) * sigma + params.beta * np.eye(h)
    return sigma


def cholesky_ar1(rho: float, horizon: int) -> CholeskyFactor:
    """Closed-form Cholesky factor of the pure AR(1) correlation matrix.

    First column is ``rho^i``; the remaining lower triangle is
    ``rho^(i-j) * sqrt(1 - rho^2)``.  No factorization loop is needed.
    """
    if abs(rho) > RHO_MAX:
        raise ValueError(f"|rho| must not exceed {RHO_MAX}")
    if horizon < 1:
        raise EmptyHorizon("horizon must be at least 1")
    idx = np.arange(horizon)
    powers = np.power(rho, idx.astype(float))
    diff = idx[:, None] - idx[None, :]
    lower = np.tril(powers[np.maximum(diff, 0)])
    lower[:, 1:] *= np.sqrt(1.0 - rho * rho)
    lower[:, 0] = powers
    return CholeskyFactor(dim=horizon, lower=lower)


def cholesky_dense(sigma: np.ndarray) -> CholeskyFactor:
    """Standard lower-triangular Cholesky with an explicit pivot check."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("covariance must be a square matrix")
    n = sigma.shape[0]
    lower = np.zeros_like(sigma)
    for j in range(n):
        pivot = sigma[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= 1e-12:
            raise NotPositiveDefinite(f"pivot {pivot:.3e} at column {j}")
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1 :, j] = (sigma[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / lower[
                j, j
            ]
    return CholeskyFactor(dim=n, lower=lower)


def cholesky_for(params: CopulaParams) -> CholeskyFactor:
    """Factor of ``build_covariance(params)`` using the fast path when valid."""
    if params.beta is None:
        return cholesky_ar1(params.rho, params.horizon)
    return cholesky_dense(build_covariance(params))


def norm_cdf(z):
    """Standard normal CDF (erf-based, max error well below 1e-9)."""
    z_in = np.asarray(z, dtype=float)
    out = ndtr(z_in)
    if z_in.ndim == 0:
        return float(out)
    return out


# Rational initial approximation for the normal quantile (coefficients due
# to P. Acklam; |relative error| < 1.2e-9 on (0, 1)), then one Halley step
# against norm_cdf pushes the round-trip error to the 1e-15 scale.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _norm_inv_scalar(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidProbability("probabilities must lie strictly inside (0, 1)")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    elif p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    else:
        q = p - 0.5
        r = q * q
        x = (
            ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
        ) * q / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    if abs(x) < 30.0:
        err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
        corr = err * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
        x -= corr / (1.0 + 0.5 * x * corr)
    return x


def norm_inv_cdf(u):
    """Standard normal inverse CDF for probabilities strictly inside (0, 1)."""
    if type(u) is float:
        return _norm_inv_scalar(u)
    u_in = np.asarray(u, dtype=float)
    if np.any(u_in <= 0.0) or np.any(u_in >= 1.0) or not np.all(np.isfinite(u_in)):
        raise InvalidProbability("probabilities must lie strictly inside (0, 1)")
    p = np.atleast_1d(u_in).astype(float)
    x = np.empty_like(p)

    central = (p >= _P_LOW) & (p <= 1.0 - _P_LOW)
    if central.any():
        q = p[central] - 0.5
        r = q * q
        num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[central] = num * q / den

    lower = p < _P_LOW
    if lower.any():
        q = np.sqrt(-2.0 * np.log(p[lower]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        x[lower] = num / den

    upper = p > 1.0 - _P_LOW
    if upper.any():
        q = np.sqrt(-2.0 * np.log(1.0 - p[upper]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        x[upper] = -num / den

    # Halley refinement; skipped in the extreme tails where exp(x^2/2)
    # would overflow and the u-space error is already negligible.
    safe = np.abs(x) < 30.0
    if safe.any():
        xs = x[safe]
        err = ndtr(xs) - p[safe]
        corr = err * np.sqrt(2.0 * np.pi) * np.exp(0.5 * xs * xs)
        x[safe] = xs - corr / (1.0 + 0.5 * xs * corr)

    if u_in.ndim == 0:
        return float(x[0])
    return x


def sample_copula_uniforms(
    factor: CholeskyFactor, n_paths: int, rng_seed
) -> np.ndarray:
    """Draw ``n_paths`` rows of correlated uniforms u = norm_cdf(L @ eps).

    Deterministic given the seed.  Noise is consumed path-major,
    horizon-minor, so an identity factor reproduces independent sampling
    draw for draw.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    rng = np.random.default_rng(rng_seed)
    eps = rng.standard_normal((n_paths, factor.dim))
    z = eps @ factor.lower.T
    return np.clip(ndtr(z), 1e-12, 1.0 - 1e-12)


def estimate_rho(series) -> float:
    """Lag-1 Pearson autocorrelation, clamped into [-0.999, 0.999].

    Returns 0 when either lagged slice has zero variance (constant series),
    which downstream degrades copula sampling to independence.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise SeriesTooShort("need at least 3 observations for lag-1 correlation")
    a = x[:-1]
    b = x[1:]
    # constant slices have zero variance; checked on the raw values because
    # mean subtraction alone can turn an exactly-constant slice into
    # rounding noise with correlation +-1
    if a.min() == a.max() or b.min() == b.max():
        return 0.0
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt((a @ a) * (b @ b))
    if denom <= 0.0 or not np.isfinite(denom):
        return 0.0
    rho = float((a @ b) / denom)
    return float(np.clip(rho, -RHO_MAX, RHO_MAX))
