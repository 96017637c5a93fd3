"""Forecaster handles that emit per-horizon quantile knots.

A forecaster maps a context window to quantile knots for each of H future
steps in a single call; that call is the unit of cost accounting (one
"forward pass", whatever the horizon).  Reference forecasters make the
pipeline testable without any external model:

* ``GaussianAR1Forecaster`` -- exact multi-step marginals of a Gaussian
  AR(1) process, plus exact one-step conditionals for oracle experiments.
* ``SeasonalNaiveForecaster`` -- repeats the last season; degenerate
  (level-independent) knots.
* ``BiasedDriftForecaster`` -- wraps another forecaster and multiplies
  every knot value by a constant, for studying error accumulation.
* ``ExternalForecaster`` -- serves pre-materialized forecasts loaded from
  a QF-JSONL file, keyed by (series_id, context_length).
"""

import json
import logging
import threading
from dataclasses import dataclass, field

import numpy as np

from .copula import estimate_rho, norm_inv_cdf
from .errors import (
    ContextTooShort,
    HorizonMismatch,
    MissingExternalForecast,
    ParseError,
)
from .iqf import DEFAULT_LEVELS, QuantileKnots, _knots_trusted

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class ForecastRequest:
    """Context window plus the horizon and quantile levels to emit.

    ``series_id`` is only consulted by :class:`ExternalForecaster`, whose
    store is keyed by series identity.
    """

    context: np.ndarray
    horizon: int
    levels: tuple = DEFAULT_LEVELS
    series_id: str | None = None

    def __post_init__(self):
        ctx = np.asarray(self.context, dtype=float)
        if ctx.ndim != 1 or ctx.size == 0:
            raise ValueError("context must be a non-empty 1-d sequence")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        object.__setattr__(self, "context", ctx)
        if type(self.levels) is not tuple:
            object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))


@dataclass(frozen=True, slots=True)
class MultiStepForecast:
    """Quantile knots for horizons 1..H from one forecaster call."""

    per_horizon: tuple
    forward_passes_consumed: int = 1

    @property
    def horizon(self) -> int:
        return len(self.per_horizon)


class ForwardPassCounter:
    """Shared atomic counter of forecaster invocations."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def increment(self) -> None:
        with self._lock:
            self._count += 1

    @property
    def value(self) -> int:
        with self._lock:
            return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0


FORWARD_PASSES = ForwardPassCounter()


def forecast(handle, req: ForecastRequest) -> MultiStepForecast:
    """Run one forward pass of ``handle`` and count it."""
    result = handle._forecast(req)
    FORWARD_PASSES.increment()
    return result


class GaussianAR1Forecaster:
    """Exact multi-step marginals of x_t - mu = phi (x_{t-1} - mu) + sigma e_t.

    The i-step-ahead marginal given a context ending at x_T is normal with
    mean ``mu + phi^i (x_T - mu)`` and variance
    ``sigma^2 (1 - phi^(2i)) / (1 - phi^2)`` (``sigma^2 i`` when |phi| = 1).
    """

    kind = "gaussian_ar1"
    supports_exact = True

    def __init__(self, phi: float, sigma: float, mu: float = 0.0):
        if abs(phi) > 1.0:
            raise ValueError("|phi| must not exceed 1")
        if sigma <= 0.0:
            raise ValueError("sigma must be positive")
        self.phi = float(phi)
        self.sigma = float(sigma)
        self.mu = float(mu)
        self._z_cache: dict[tuple, np.ndarray] = {}

    def _z(self, levels: tuple):
        cached = self._z_cache.get(levels)
        if cached is None:
            arr = np.asarray(levels)
            cached = (arr, norm_inv_cdf(arr))
            self._z_cache[levels] = cached
        return cached

    def horizon_moments(self, x_last: float, horizon: int):
        """Means and standard deviations for horizons 1..H."""
        i = np.arange(1, horizon + 1, dtype=float)
        phi_i = self.phi**i
        means = self.mu + phi_i * (x_last - self.mu)
        if abs(self.phi) == 1.0:
            var = self.sigma**2 * i
        else:
            var = self.sigma**2 * (1.0 - self.phi ** (2.0 * i)) / (1.0 - self.phi**2)
        return means, np.sqrt(var)

    def _forecast(self, req: ForecastRequest) -> MultiStepForecast:
        levels, z = self._z(req.levels)
        x_last = req.context[-1]
        if req.horizon == 1:
            mean = self.mu + self.phi * (x_last - self.mu)
            values = mean + self.sigma * z
            return MultiStepForecast(per_horizon=(_knots_trusted(levels, values),))
        means, sds = self.horizon_moments(float(x_last), req.horizon)
        values_mat = means[:, None] + sds[:, None] * z[None, :]
        knots = tuple(
            _knots_trusted(levels, values_mat[i]) for i in range(req.horizon)
        )
        return MultiStepForecast(per_horizon=knots)

    def one_step_quantile(self, context, u) -> float:
        """Exact inverse CDF of the one-step conditional distribution."""
        x_last = float(np.asarray(context)[-1])
        mean = self.mu + self.phi * (x_last - self.mu)
        return mean + self.sigma * norm_inv_cdf(u)


class SeasonalNaiveForecaster:
    """Repeats the last observed season; all quantile levels coincide."""

    kind = "seasonal_naive"
    supports_exact = False

    def __init__(self, season_length: int):
        if season_length < 1:
            raise ValueError("season_length must be at least 1")
        self.season_length = int(season_length)

    def point_forecast(self, context, horizon: int) -> np.ndarray:
        ctx = np.asarray(context, dtype=float)
        m = self.season_length
        if ctx.size < m:
            raise ContextTooShort(
                f"seasonal naive needs at least one season ({m}), got {ctx.size}"
            )
        offsets = (np.arange(horizon)) % m
        return ctx[ctx.size - m + offsets]

    def _forecast(self, req: ForecastRequest) -> MultiStepForecast:
        points = self.point_forecast(req.context, req.horizon)
        levels = np.asarray(req.levels)
        knots = tuple(
            QuantileKnots(levels=levels, values=np.full(levels.size, p))
            for p in points
        )
        return MultiStepForecast(per_horizon=knots)


class BiasedDriftForecaster:
    """Multiplies every knot value of an inner forecaster by ``bias``.

    Feeding biased samples back through autoregressive generation compounds
    the bias step over step, which is the mechanism under study.
    """

    kind = "biased_drift"

    def __init__(self, inner, bias: float):
        if bias <= 0.0:
            raise ValueError("bias must be positive (it scales knot values)")
        self.inner = inner
        self.bias = float(bias)

    @property
    def supports_exact(self) -> bool:
        return getattr(self.inner, "supports_exact", False)

    def _forecast(self, req: ForecastRequest) -> MultiStepForecast:
        base = self.inner._forecast(req)
        knots = tuple(
            _knots_trusted(k.levels, self.bias * k.values)
            for k in base.per_horizon
        )
        return MultiStepForecast(per_horizon=knots)

    def one_step_quantile(self, context, u) -> float:
        return self.bias * self.inner.one_step_quantile(context, u)


@dataclass(frozen=True, slots=True)
class StoredForecast:
    levels: np.ndarray
    values: np.ndarray  # shape (n_levels, horizons), levels-major


class ExternalForecaster:
    """Serves forecasts from a store keyed by (series_id, context_length)."""

    kind = "external_file"
    supports_exact = False

    def __init__(self, store: dict):
        self.store = store

    def _forecast(self, req: ForecastRequest) -> MultiStepForecast:
        key = (req.series_id, int(np.asarray(req.context).size))
        rec = self.store.get(key)
        if rec is None:
            raise MissingExternalForecast(f"no stored forecast for {key}")
        if req.horizon > rec.values.shape[1]:
            raise HorizonMismatch(
                f"requested horizon {req.horizon} exceeds stored {rec.values.shape[1]}"
            )
        knots = tuple(
            QuantileKnots(levels=rec.levels, values=rec.values[:, i])
            for i in range(req.horizon)
        )
        return MultiStepForecast(per_horizon=knots)


def _reject_constant(token: str):
    raise ValueError(f"non-finite number {token!r} not allowed")


def load_external_forecasts(path) -> dict:
    """Load a QF-JSONL file into a forecast store.

    One JSON record per line with fields ``series_id``, ``context_length``,
    ``levels``, ``horizons`` and levels-major ``values``.  Duplicate keys
    keep the last record (with a warning); an empty file yields an empty
    store.
    """
    store: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line, parse_constant=_reject_constant)
            except ValueError as exc:
                raise ParseError(f"invalid JSON: {exc}", line=line_no) from exc
            try:
                sid = rec["series_id"]
                clen = int(rec["context_length"])
                levels = np.asarray(rec["levels"], dtype=float)
                horizons = int(rec["horizons"])
                values = np.asarray(rec["values"], dtype=float)
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad record fields: {exc}", line=line_no) from exc
            if not isinstance(sid, str) or not sid:
                raise ParseError("series_id must be a non-empty string", line=line_no)
            if levels.ndim != 1 or np.any(np.diff(levels) <= 0) or np.any(
                (levels <= 0) | (levels >= 1)
            ):
                raise ParseError("levels must be increasing inside (0, 1)", line=line_no)
            if values.shape != (levels.size, horizons):
                raise ParseError(
                    f"values shape {values.shape} != (levels, horizons) "
                    f"({levels.size}, {horizons})",
                    line=line_no,
                )
            if not np.all(np.isfinite(values)):
                raise ParseError("non-finite forecast values", line=line_no)
            key = (sid, clen)
            if key in store:
                logger.warning("duplicate forecast key %s at line %d; last wins", key, line_no)
            store[key] = StoredForecast(levels=levels, values=values)
    return store


def fit_ar1_forecaster(context) -> GaussianAR1Forecaster:
    """Fit AR(1) parameters to a context window by moments.

    Convenience for experiments that need a per-series reference
    forecaster: lag-1 autocorrelation for phi, sample mean for mu, and the
    residual standard deviation for sigma.
    """
    ctx = np.asarray(context, dtype=float)
    phi = estimate_rho(ctx)
    mu = float(ctx.mean())
    resid = (ctx[1:] - mu) - phi * (ctx[:-1] - mu)
    sigma = float(np.std(resid))
    if sigma <= 0.0:
        sigma = max(1e-9, 1e-6 * max(1.0, abs(mu)))
    return GaussianAR1Forecaster(phi=phi, sigma=sigma, mu=mu)
