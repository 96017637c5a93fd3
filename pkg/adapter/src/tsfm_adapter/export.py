"""QF-JSONL export: multi-step forecasts and autoregressive traces.

One record per line:

    {"series_id": str, "context_length": int, "levels": [...],
     "horizons": int, "values": [[...per horizon...] per level]}

The holdout convention matches the scoring side: the last ``horizon``
points of each series are held out and the forecast context is everything
before them.

Autoregressive traces replay offline: path ``n`` of series ``sid`` logs its
step forecasts under the id ``{sid}#p{n}`` keyed by the extended context
length, and draws one uniform per step from
``default_rng(derive(derive(seed, sid), "p{n}"))`` where ``derive`` XORs the
seed with the first 8 bytes of sha256 of the label.  A consumer that walks
the same convention reproduces the exact sampled paths.
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from .datasets import read_dataset
from .iqf import KnotSampler

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = tuple(round(0.1 * i, 10) for i in range(1, 10))


def derive_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return (int(seed) ^ int.from_bytes(digest[:8], "big")) & 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class AdapterJob:
    model: object
    dataset_path: str
    horizon: int
    levels: tuple = DEFAULT_LEVELS
    autoregressive_paths: int = 0  # 0 disables trace materialization
    seed: int = 0
    nonneg: bool = True


def _record(sid: str, context_length: int, levels, values: np.ndarray) -> dict:
    return {
        "series_id": sid,
        "context_length": int(context_length),
        "levels": [float(v) for v in levels],
        "horizons": int(values.shape[1]),
        "values": [[float(v) for v in row] for row in values],
    }


def _forecast_record(job: AdapterJob, sid: str, context, horizon: int) -> dict:
    values = np.asarray(
        job.model.predict_quantiles(context, horizon, job.levels), dtype=float
    )
    if values.shape != (len(job.levels), horizon):
        raise ValueError(
            f"model returned shape {values.shape}, expected "
            f"({len(job.levels)}, {horizon})"
        )
    if not np.all(np.isfinite(values)):
        raise ValueError(f"model produced non-finite values for {sid!r}")
    return _record(sid, len(context), job.levels, values)


def _write_atomic(records: list, out_path) -> None:
    tmp = f"{out_path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    os.replace(tmp, out_path)


def export_multistep(job: AdapterJob, out_path) -> dict:
    """One multi-step record per series; failures are logged and skipped."""
    dataset = read_dataset(job.dataset_path)
    records = []
    failures = 0
    for series in dataset.series:
        context = series.values[: -job.horizon]
        if context.size == 0:
            failures += 1
            logger.warning("series %s shorter than the horizon; skipped", series.id)
            continue
        try:
            records.append(_forecast_record(job, series.id, context, job.horizon))
        except Exception:
            failures += 1
            logger.exception("inference failed for series %s; skipped", series.id)
    _write_atomic(records, out_path)
    return {"records": len(records), "failures": failures}


def export_autoregressive_trace(job: AdapterJob, out_path) -> dict:
    """Base forecast plus the full N*H trace of one-step forecasts.

    Per series: one multi-step record at the base context, then for each
    path one horizon-1 record per step under the ``#p<n>`` id, sampled with
    the documented seed/uniform convention so the trace can be replayed.
    Returns the sampled paths for verification alongside the counts.
    """
    if job.autoregressive_paths < 1:
        raise ValueError("autoregressive trace needs at least 1 path")
    dataset = read_dataset(job.dataset_path)
    records = []
    sampled: dict = {}
    failures = 0
    for series in dataset.series:
        context = series.values[: -job.horizon]
        if context.size == 0:
            failures += 1
            logger.warning("series %s shorter than the horizon; skipped", series.id)
            continue
        try:
            records.append(_forecast_record(job, series.id, context, job.horizon))
            base_seed = derive_seed(job.seed, series.id)
            paths = np.empty((job.autoregressive_paths, job.horizon))
            for n in range(job.autoregressive_paths):
                sid_n = f"{series.id}#p{n}"
                rng = np.random.default_rng(derive_seed(base_seed, f"p{n}"))
                ctx = list(context)
                for i in range(job.horizon):
                    step = _forecast_record(job, sid_n, ctx, 1)
                    records.append(step)
                    sampler = KnotSampler(
                        job.levels,
                        [row[0] for row in step["values"]],
                        nonneg=job.nonneg,
                    )
                    u = min(max(rng.random(), 1e-12), 1.0 - 1e-12)
                    x = sampler.quantile(u)
                    ctx.append(x)
                    paths[n, i] = x
            sampled[series.id] = paths
        except Exception:
            failures += 1
            logger.exception("trace failed for series %s; skipped", series.id)
    _write_atomic(records, out_path)
    return {"records": len(records), "failures": failures, "paths": sampled}
