"""Invertible marginal distributions fitted to quantile knots.

A forecaster emits values at a small set of probability levels (by default
0.1 ... 0.9).  This module turns those knots into a full CDF: piecewise
linear between knots, exponential tails beyond the outermost knots, and an
optional point mass at zero for non-negative series.  Both the CDF and its
inverse are closed-form, so sampling and probability-integral transforms
round-trip exactly on the continuous part of the support.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidKnots, InvalidProbability

DEFAULT_LEVELS = tuple(np.round(np.arange(1, 10) * 0.1, 10))


@dataclass(frozen=True, slots=True)
class QuantileKnots:
    """Probability levels and the forecast values at those levels.

    Levels must be strictly increasing inside (0, 1).  Raw values may cross;
    they are repaired before fitting.
    """

    levels: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if levels.ndim != 1 or values.ndim != 1 or levels.size != values.size:
            raise InvalidKnots("levels and values must be 1-d and equal length")
        if levels.size < 2:
            raise InvalidKnots("need at least 2 quantile knots")
        if not np.all(np.isfinite(levels)) or not np.all(np.isfinite(values)):
            raise InvalidKnots("non-finite knot levels or values")
        if np.any(levels <= 0.0) or np.any(levels >= 1.0):
            raise InvalidKnots("levels must lie strictly inside (0, 1)")
        if np.any(np.diff(levels) <= 0.0):
            raise InvalidKnots("levels must be strictly increasing")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, slots=True)
class MarginalDistribution:
    """Full CDF fitted to repaired quantile knots.

    ``left_scale``/``right_scale`` are the exponential tail scales;
    ``point_mass_zero`` is the probability lumped at 0 when the left tail is
    truncated for non-negative support.  Immutable after fit; safe to share
    across threads.
    """

    levels: np.ndarray
    values: np.ndarray
    left_scale: float
    right_scale: float
    nonneg: bool
    point_mass_zero: float = 0.0

    @property
    def knot_range(self) -> tuple[float, float]:
        return float(self.values[0]), float(self.values[-1])

    def quantile(self, u):
        return quantile(self, u)

    def cdf(self, x):
        return cdf(self, x)


def _knots_trusted(levels: np.ndarray, values: np.ndarray) -> QuantileKnots:
    """Build QuantileKnots without re-validation.

    Internal fast path for producers whose output is valid by construction
    (validated levels, finite values); kept in parity with the public
    constructor by tests.
    """
    obj = object.__new__(QuantileKnots)
    object.__setattr__(obj, "levels", levels)
    object.__setattr__(obj, "values", values)
    return obj


def repair_monotone(values) -> np.ndarray:
    """Make knot values non-decreasing, then strictly increasing.

    Applies a running maximum (order-preserving, idempotent) and separates
    any remaining ties by ``1e-9 * max(1, |max value|)`` so the quantile
    function is invertible.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise InvalidKnots("need at least 2 values")
    if not np.isfinite(values).all():
        raise InvalidKnots("non-finite knot values")
    out = np.maximum.accumulate(values)
    if (out[1:] > out[:-1]).all():
        return out
    eps = 1e-9 * max(1.0, abs(float(out[-1])))
    for k in range(1, out.size):
        if out[k] <= out[k - 1]:
            out[k] = out[k - 1] + eps
    return out


def fit_iqf(knots: QuantileKnots, nonneg: bool) -> MarginalDistribution:
    """Fit the interpolated quantile function to one horizon's knots.

    Tail scales match the density of the adjacent linear segment, so the
    density is continuous at the outermost knots:

        left scale  = a1 * (x2 - x1) / (a2 - a1)
        right scale = (1 - aK) * (xK - x[K-1]) / (aK - a[K-1])

    With ``nonneg`` the left tail is truncated at 0 and the residual
    probability ``a1 * exp(-x1 / left_scale)`` becomes a point mass at 0.
    """
    levels = knots.levels
    values = knots.values
    if nonneg:
        values = np.maximum(values, 0.0)
    values = repair_monotone(values)

    a1, a2 = levels[0], levels[1]
    ak, ak1 = levels[-1], levels[-2]
    s_l = float(a1 * (values[1] - values[0]) / (a2 - a1))
    s_r = float((1.0 - ak) * (values[-1] - values[-2]) / (ak - ak1))

    p0 = 0.0
    if nonneg:
        p0 = float(a1 * np.exp(-values[0] / s_l))
    return MarginalDistribution(
        levels=levels,
        values=values,
        left_scale=s_l,
        right_scale=s_r,
        nonneg=nonneg,
        point_mass_zero=p0,
    )


def _quantile_scalar(dist: MarginalDistribution, u: float) -> float:
    if not 0.0 < u < 1.0:
        raise InvalidProbability("probabilities must lie strictly inside (0, 1)")
    levels, values = dist.levels, dist.values
    if u < levels[0]:
        x = values[0] + dist.left_scale * math.log(u / levels[0])
        return max(x, 0.0) if dist.nonneg else x
    if u > levels[-1]:
        return values[-1] + dist.right_scale * math.log(
            (1.0 - levels[-1]) / (1.0 - u)
        )
    i = int(np.searchsorted(levels, u))
    if levels[i] == u:
        return float(values[i])
    frac = (u - levels[i - 1]) / (levels[i] - levels[i - 1])
    return float(values[i - 1] + frac * (values[i] - values[i - 1]))


def quantile(dist: MarginalDistribution, u):
    """Inverse CDF.  Accepts a scalar or array of probabilities in (0, 1)."""
    if type(u) is float:
        return _quantile_scalar(dist, u)
    u_in = np.asarray(u, dtype=float)
    if np.any(u_in <= 0.0) or np.any(u_in >= 1.0) or not np.all(np.isfinite(u_in)):
        raise InvalidProbability("probabilities must lie strictly inside (0, 1)")
    u_arr = np.atleast_1d(u_in)

    levels, values = dist.levels, dist.values
    a1, ak = levels[0], levels[-1]
    x1, xk = values[0], values[-1]

    out = np.interp(u_arr, levels, values)
    lo = u_arr < a1
    if lo.any():
        left = x1 + dist.left_scale * np.log(u_arr[lo] / a1)
        if dist.nonneg:
            # u <= point_mass_zero lands exactly on the atom at 0
            left = np.maximum(left, 0.0)
        out[lo] = left
    hi = u_arr > ak
    if hi.any():
        out[hi] = xk + dist.right_scale * np.log((1.0 - ak) / (1.0 - u_arr[hi]))
    if u_in.ndim == 0:
        return float(out[0])
    return out


def _fit_shared_arrays(levels: np.ndarray, values_mat: np.ndarray, nonneg: bool):
    """Row-wise fit over a shared levels grid, returned as flat arrays."""
    if nonneg:
        values_mat = np.maximum(values_mat, 0.0)
    rep = np.maximum.accumulate(values_mat, axis=1)
    ok = (rep[:, 1:] > rep[:, :-1]).all(axis=1)
    if not ok.all():
        for r in np.flatnonzero(~ok):
            eps = 1e-9 * max(1.0, abs(float(rep[r, -1])))
            row = rep[r]
            for k in range(1, row.size):
                if row[k] <= row[k - 1]:
                    row[k] = row[k - 1] + eps
    a1, a2 = levels[0], levels[1]
    ak, ak1 = levels[-1], levels[-2]
    s_l = a1 * (rep[:, 1] - rep[:, 0]) / (a2 - a1)
    s_r = (1.0 - ak) * (rep[:, -1] - rep[:, -2]) / (ak - ak1)
    if nonneg:
        p0 = a1 * np.exp(-rep[:, 0] / s_l)
    else:
        p0 = np.zeros(rep.shape[0])
    return rep, s_l, s_r, p0


def fit_iqf_shared(levels: np.ndarray, values_mat: np.ndarray, nonneg: bool) -> list:
    """Fit one marginal per row of ``values_mat`` over a shared levels grid.

    Produces exactly what mapping :func:`fit_iqf` over the rows would
    (kept in parity by tests), with the array work batched.
    """
    rep, s_l, s_r, p0 = _fit_shared_arrays(levels, values_mat, nonneg)
    return [
        MarginalDistribution(
            levels=levels,
            values=rep[i],
            left_scale=float(s_l[i]),
            right_scale=float(s_r[i]),
            nonneg=nonneg,
            point_mass_zero=float(p0[i]),
        )
        for i in range(rep.shape[0])
    ]


def _invert_columns(
    levels: np.ndarray,
    values: np.ndarray,
    s_l: np.ndarray,
    s_r: np.ndarray,
    nonneg,
    u: np.ndarray,
) -> np.ndarray:
    """Column i of ``u`` through the marginal given by row i of ``values``."""
    k = levels.size
    flat = values.ravel()
    offsets = np.arange(values.shape[0]) * k
    idx = np.clip(levels.searchsorted(u), 1, k - 1)
    idx += offsets
    lo_v = flat[idx - 1]
    hi_v = flat[idx]
    idx -= offsets
    lo_l = levels[idx - 1]
    out = lo_v + (u - lo_l) / (levels[idx] - lo_l) * (hi_v - lo_v)

    lo_mask = u < levels[0]
    if lo_mask.any():
        cols = np.nonzero(lo_mask)[1]
        left = values[cols, 0] + s_l[cols] * np.log(u[lo_mask] / levels[0])
        if np.ndim(nonneg) == 0:
            if nonneg:
                left = np.maximum(left, 0.0)
        else:
            left = np.where(nonneg[cols], np.maximum(left, 0.0), left)
        out[lo_mask] = left
    hi_mask = u > levels[-1]
    if hi_mask.any():
        cols = np.nonzero(hi_mask)[1]
        out[hi_mask] = values[cols, -1] + s_r[cols] * np.log(
            (1.0 - levels[-1]) / (1.0 - u[hi_mask])
        )
    return out


def _quantile_matrix_unchecked(dists, levels: np.ndarray, u: np.ndarray) -> np.ndarray:
    values = np.stack([d.values for d in dists])
    s_l = np.array([d.left_scale for d in dists])
    s_r = np.array([d.right_scale for d in dists])
    nonneg = np.array([d.nonneg for d in dists])
    return _invert_columns(levels, values, s_l, s_r, nonneg, u)


def quantile_matrix(dists, u: np.ndarray) -> np.ndarray:
    """Map column i of ``u`` through ``dists[i]``, vectorized across horizons.

    Equivalent to stacking per-horizon :func:`quantile` calls; requires all
    marginals to share one levels grid (true whenever they come from a
    single multi-step forecast).  Falls back to the per-horizon path when
    the grids differ.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[1] != len(dists):
        raise ValueError("u must be (n_paths, n_horizons)")
    levels = dists[0].levels
    if any(
        d.levels is not levels and not np.array_equal(d.levels, levels)
        for d in dists[1:]
    ):
        out = np.empty_like(u)
        for i, dist in enumerate(dists):
            out[:, i] = quantile(dist, u[:, i])
        return out
    if np.any(u <= 0.0) or np.any(u >= 1.0) or not np.isfinite(u).all():
        raise InvalidProbability("probabilities must lie strictly inside (0, 1)")
    return _quantile_matrix_unchecked(dists, levels, u)


def cdf(dist: MarginalDistribution, x):
    """CDF; exact inverse of :func:`quantile` on the continuous part."""
    x_in = np.asarray(x, dtype=float)
    x_arr = np.atleast_1d(x_in)

    levels, values = dist.levels, dist.values
    a1, ak = levels[0], levels[-1]
    x1, xk = values[0], values[-1]

    out = np.interp(x_arr, values, levels)
    lo = x_arr < x1
    if lo.any():
        out[lo] = a1 * np.exp((x_arr[lo] - x1) / dist.left_scale)
        if dist.nonneg:
            out[x_arr < 0.0] = 0.0
    hi = x_arr > xk
    if hi.any():
        out[hi] = 1.0 - (1.0 - ak) * np.exp((xk - x_arr[hi]) / dist.right_scale)
    if x_in.ndim == 0:
        return float(out[0])
    return out
