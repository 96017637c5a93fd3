"""Model backends that answer multi-step quantile queries.

Built-in toy models keep the export pipeline testable offline; the chronos
backend wraps a real checkpoint when the optional dependencies are
installed.  Every backend maps (context, horizon, levels) to a levels-major
(L, H) array of quantile values and is deterministic for a given input.
"""

import math

import numpy as np

# Acklam's rational approximation of the standard normal quantile; plenty
# accurate for toy forecast spreads.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)


def _norm_ppf(p: float) -> float:
    if p < 0.02425:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    if p > 1.0 - 0.02425:
        return -_norm_ppf(1.0 - p)
    q = p - 0.5
    r = q * q
    return (
        ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
    ) * q / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


class ToyDriftModel:
    """Linear-drift point forecast with a sqrt-horizon Gaussian-shaped fan."""

    name = "toy:drift"

    def predict_quantiles(self, context, horizon: int, levels) -> np.ndarray:
        ctx = np.asarray(context, dtype=float)
        diffs = np.diff(ctx[-min(ctx.size, 25) :]) if ctx.size > 1 else np.zeros(1)
        drift = float(diffs.mean()) if diffs.size else 0.0
        base = float(ctx[-1])
        spread = max(float(diffs.std()) if diffs.size else 0.0,
                     1e-6 * max(1.0, abs(base)))
        steps = np.arange(1, horizon + 1, dtype=float)
        points = base + drift * steps
        scales = spread * np.sqrt(steps)
        z = np.asarray([_norm_ppf(float(lv)) for lv in levels])
        return points[None, :] + z[:, None] * scales[None, :]


class ToySeasonalModel:
    """Repeats the last season with a widening fan around it."""

    def __init__(self, season_length: int):
        if season_length < 1:
            raise ValueError("season_length must be at least 1")
        self.season_length = int(season_length)
        self.name = f"toy:seasonal:{season_length}"

    def predict_quantiles(self, context, horizon: int, levels) -> np.ndarray:
        ctx = np.asarray(context, dtype=float)
        m = self.season_length
        if ctx.size < m:
            raise ValueError(f"context shorter than one season ({m})")
        offsets = np.arange(horizon) % m
        points = ctx[ctx.size - m + offsets]
        resid = np.abs(np.diff(ctx)) if ctx.size > 1 else np.zeros(1)
        spread = max(float(resid.mean()) if resid.size else 0.0,
                     1e-6 * max(1.0, abs(float(ctx[-1]))))
        scales = spread * np.sqrt(np.arange(1, horizon + 1, dtype=float))
        z = np.asarray([_norm_ppf(float(lv)) for lv in levels])
        return points[None, :] + z[:, None] * scales[None, :]


class ChronosModel:
    """Chronos-family checkpoint behind the optional ``chronos`` extra."""

    def __init__(self, model_id: str, device: str = "cpu"):
        try:
            import torch
            from chronos import BaseChronosPipeline
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise RuntimeError(
                "the chronos backend needs the optional dependencies: "
                "pip install 'tsfm-adapter[chronos]'"
            ) from exc
        self._torch = torch
        self.pipeline = BaseChronosPipeline.from_pretrained(model_id, device_map=device)
        self.name = f"chronos:{model_id}"

    def predict_quantiles(self, context, horizon: int, levels) -> np.ndarray:
        torch = self._torch
        torch.manual_seed(0)  # sampling-based pipelines stay reproducible
        tensor = torch.tensor(np.asarray(context, dtype=np.float32))
        quantiles, _ = self.pipeline.predict_quantiles(
            context=tensor,
            prediction_length=horizon,
            quantile_levels=list(levels),
        )
        # (1, H, L) -> levels-major (L, H)
        return quantiles[0].numpy().T.astype(float)


def resolve_model(spec: str):
    parts = spec.split(":")
    if parts[0] == "toy":
        if len(parts) >= 2 and parts[1] == "drift":
            return ToyDriftModel()
        if len(parts) >= 2 and parts[1] == "seasonal":
            season = int(parts[2]) if len(parts) > 2 else 1
            return ToySeasonalModel(season)
        raise ValueError(f"unknown toy model {spec!r}")
    if parts[0] == "chronos":
        if len(parts) < 2:
            raise ValueError("chronos backend needs chronos:MODEL_ID")
        return ChronosModel(":".join(parts[1:]))
    raise ValueError(f"unknown model spec {spec!r}")
