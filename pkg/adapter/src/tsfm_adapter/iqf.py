"""Standalone quantile-knot sampling rule.

Deliberately self-contained: the consumer of the exported files owns the
canonical implementation, and this copy is held to it by a shared fixture
of (knots, u, quantile) triples at 1e-9.  Piecewise-linear between knots,
exponential tails matched to the adjacent segment density, and (for
non-negative series) a truncated left tail whose residual mass sits at 0.
"""

import math

import numpy as np


def repair_monotone(values: np.ndarray) -> np.ndarray:
    """Running maximum, then ties separated by 1e-9 * max(1, |max value|)."""
    out = np.maximum.accumulate(np.asarray(values, dtype=float))
    if (out[1:] > out[:-1]).all():
        return out
    eps = 1e-9 * max(1.0, abs(float(out[-1])))
    for k in range(1, out.size):
        if out[k] <= out[k - 1]:
            out[k] = out[k - 1] + eps
    return out


class KnotSampler:
    """Invertible quantile function fitted to one horizon's knots."""

    def __init__(self, levels, values, nonneg: bool):
        levels = np.asarray(levels, dtype=float)
        values = np.asarray(values, dtype=float)
        if levels.size != values.size or levels.size < 2:
            raise ValueError("levels and values must match and have >= 2 knots")
        if nonneg:
            values = np.maximum(values, 0.0)
        values = repair_monotone(values)
        self.levels = levels
        self.values = values
        self.nonneg = nonneg
        a1, a2 = levels[0], levels[1]
        ak, ak1 = levels[-1], levels[-2]
        self.left_scale = float(a1 * (values[1] - values[0]) / (a2 - a1))
        self.right_scale = float(
            (1.0 - ak) * (values[-1] - values[-2]) / (ak - ak1)
        )
        self.point_mass_zero = (
            float(a1 * math.exp(-values[0] / self.left_scale)) if nonneg else 0.0
        )

    def quantile(self, u: float) -> float:
        if not 0.0 < u < 1.0:
            raise ValueError("u must lie strictly inside (0, 1)")
        levels, values = self.levels, self.values
        if u < levels[0]:
            x = values[0] + self.left_scale * math.log(u / levels[0])
            return max(x, 0.0) if self.nonneg else x
        if u > levels[-1]:
            return values[-1] + self.right_scale * math.log(
                (1.0 - levels[-1]) / (1.0 - u)
            )
        i = int(np.searchsorted(levels, u))
        if levels[i] == u:
            return float(values[i])
        frac = (u - levels[i - 1]) / (levels[i] - levels[i - 1])
        return float(values[i - 1] + frac * (values[i] - values[i - 1]))
