"""Sample-based scores and the aggregation protocol.

CRPS measures per-horizon marginal quality; the variogram score measures
the dependence structure across horizons.  Per-series scores are divided
by a deterministic seasonal-naive baseline and summarized by the median
across series; method-vs-method comparisons are summarized as the median
percent improvement at each horizon separately.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import HorizonMismatch, NoComparableSeries, TooFewPaths

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class SeriesScores:
    """Scores of one method on one series."""

    crps_total: float
    vs_total: float
    crps_by_horizon: np.ndarray


def _paths_array(paths) -> np.ndarray:
    arr = getattr(paths, "paths", paths)
    return np.asarray(arr, dtype=float)


def crps(paths, observed) -> tuple[float, np.ndarray]:
    """Ensemble CRPS with the unbiased n(n-1) pair term.

    Per horizon: ``mean_n |x - y_n| - sum_{n != m} |y_n - y_m| / (2 N (N-1))``,
    with the pairwise sum computed in O(N log N) from the sorted sample.
    Returns (total, per-horizon array).
    """
    y = _paths_array(paths)
    x = np.asarray(observed, dtype=float)
    n = y.shape[0]
    if n < 2:
        raise TooFewPaths("CRPS pair term needs at least 2 paths")
    if y.shape[1] != x.size:
        raise HorizonMismatch(f"paths have {y.shape[1]} horizons, observed {x.size}")
    term1 = np.mean(np.abs(y - x[None, :]), axis=0)
    ys = np.sort(y, axis=0)
    weights = 2.0 * np.arange(n) - n + 1.0
    pair_sum = weights @ ys  # sum over ordered pairs of |y_n - y_m|
    term2 = pair_sum / (n * (n - 1.0))
    by_horizon = term1 - term2
    return float(by_horizon.sum()), by_horizon


def crps_point(point_path, observed) -> tuple[float, np.ndarray]:
    """CRPS of a deterministic single-path forecast (reduces to the MAE sum)."""
    y = np.asarray(point_path, dtype=float)
    x = np.asarray(observed, dtype=float)
    if y.shape != x.shape:
        raise HorizonMismatch(f"shapes {y.shape} and {x.shape} differ")
    by_horizon = np.abs(y - x)
    return float(by_horizon.sum()), by_horizon


def variogram_score(paths, observed, p: float = 0.5, chunk: int = 16384) -> float:
    """Variogram score with exponent ``p`` (0.5 by default).

    ``sum_{i,j} (|x_i - x_j|^p - mean_n |y_ni - y_nj|^p)^2`` over all
    ordered horizon pairs; the diagonal contributes nothing.  The ensemble
    mean estimates the expectation; a single path is a degenerate ensemble.
    """
    y = _paths_array(paths)
    if y.ndim == 1:
        y = y[None, :]
    x = np.asarray(observed, dtype=float)
    n, h = y.shape
    if h != x.size:
        raise HorizonMismatch(f"paths have {h} horizons, observed {x.size}")
    obs_gamma = np.abs(x[:, None] - x[None, :]) ** p
    exp_gamma = np.zeros((h, h))
    for start in range(0, n, chunk):
        block = y[start : start + chunk]
        exp_gamma += np.abs(block[:, :, None] - block[:, None, :]).__pow__(p).sum(axis=0)
    exp_gamma /= n
    return float(((obs_gamma - exp_gamma) ** 2).sum())


@dataclass(slots=True)
class NormalizedScores:
    """Baseline-normalized per-series scores and their medians."""

    per_series_crps: dict
    per_series_vs: dict
    median_crps: float
    median_vs: float
    dropped_series: int = 0


@dataclass(slots=True)
class ScoreReport:
    """Full scoring result: per-series scores per method, plus aggregates.

    ``per_series`` maps method -> series_id -> dict with ``scores``
    (:class:`SeriesScores`) and the baseline-normalized variants;
    ``aggregates`` holds the medians and per-horizon improvement arrays.
    """

    per_series: dict
    aggregates: dict

    def rows(self) -> list:
        """Flatten into per-(series, method) dicts for CSV emission."""
        out = []
        for method, series_map in self.per_series.items():
            for sid, entry in series_map.items():
                s = entry["scores"]
                out.append(
                    {
                        "series_id": sid,
                        "method": method,
                        "crps_total": s.crps_total,
                        "vs_total": s.vs_total,
                        "normalized_crps": entry.get("normalized_crps", ""),
                        "normalized_vs": entry.get("normalized_vs", ""),
                        "crps_by_horizon": list(s.crps_by_horizon),
                    }
                )
        return out


def normalize_and_aggregate(per_series: dict, baseline: dict) -> NormalizedScores:
    """Divide each series' scores by its baseline scores and take medians.

    Series whose baseline score is zero (or missing) are dropped with a
    warning; the count of dropped series is reported.
    """
    shared = sorted(set(per_series) & set(baseline))
    if not shared:
        raise NoComparableSeries("no series shared between method and baseline")
    norm_crps: dict = {}
    norm_vs: dict = {}
    dropped = 0
    for sid in shared:
        b = baseline[sid]
        s = per_series[sid]
        if b.crps_total <= 0.0 or b.vs_total <= 0.0:
            dropped += 1
            continue
        norm_crps[sid] = s.crps_total / b.crps_total
        norm_vs[sid] = s.vs_total / b.vs_total
    if dropped:
        logger.warning("dropped %d series with zero baseline score", dropped)
    if not norm_crps:
        raise NoComparableSeries("all shared series had zero baseline scores")
    return NormalizedScores(
        per_series_crps=norm_crps,
        per_series_vs=norm_vs,
        median_crps=float(np.median(list(norm_crps.values()))),
        median_vs=float(np.median(list(norm_vs.values()))),
        dropped_series=dropped,
    )


def pct_improvement_by_horizon(scores_a: dict, scores_b: dict) -> np.ndarray:
    """Median percent improvement of method b over method a, per horizon.

    Inputs map series id to a per-horizon score array.  Each cell
    contributes ``100 * (a - b) / a``; cells with ``a == 0`` are excluded.
    Returns one median per horizon (NaN where every cell was excluded).
    """
    shared = sorted(set(scores_a) & set(scores_b))
    if not shared:
        raise NoComparableSeries("no series shared between the two methods")
    horizons = {np.asarray(scores_a[sid]).size for sid in shared}
    horizons |= {np.asarray(scores_b[sid]).size for sid in shared}
    if len(horizons) != 1:
        raise HorizonMismatch(f"inconsistent horizon lengths: {sorted(horizons)}")
    h = horizons.pop()
    medians = np.full(h, np.nan)
    a_mat = np.vstack([np.asarray(scores_a[sid], dtype=float) for sid in shared])
    b_mat = np.vstack([np.asarray(scores_b[sid], dtype=float) for sid in shared])
    for i in range(h):
        a_col = a_mat[:, i]
        valid = a_col != 0.0
        if valid.any():
            medians[i] = float(
                np.median(100.0 * (a_col[valid] - b_mat[valid, i]) / a_col[valid])
            )
    return medians
