"""Command-line entry point for reproducible generation/scoring runs.

Commands:

* ``generate``  -- write sample paths for the requested methods.
* ``score``     -- score a previously written paths.csv against a dataset.
* ``bench``     -- generate + score all methods, with timing, forward-pass
                   accounting, baseline normalization, and aggregates.
* ``snowball``  -- per-horizon median percent improvement of copula-based
                   over autoregressive generation.
* ``train``     -- train the copula-parameter predictor network.

Every run writes a ``manifest.json`` (command, flags, seed, version) that
is sufficient to reproduce it.  Exit codes: 0 success, 1 runtime error,
2 configuration error.
"""

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .copula import CopulaParams, estimate_rho
from .data_io import emit_results, parse_csv_long, parse_tsf, split
from .errors import ContextTooShort, CopulaPathsError
from .forecasters import (
    BiasedDriftForecaster,
    ExternalForecaster,
    ForecastRequest,
    GaussianAR1Forecaster,
    SeasonalNaiveForecaster,
    forecast,
    load_external_forecasts,
)
from .pathgen import (
    derive_seed,
    generate_autoregressive,
    generate_copula,
    generate_naive,
)
from .predictor import (
    NetworkSpec,
    TrainingConfig,
    init_weights,
    load_checkpoint,
    predict_params,
    save_checkpoint,
    train,
)
from .scoring import (
    ScoreReport,
    SeriesScores,
    crps,
    crps_point,
    normalize_and_aggregate,
    pct_improvement_by_horizon,
    variogram_score,
)

logger = logging.getLogger(__name__)

METHODS = ("naive", "copula", "autoregressive")


class ConfigError(Exception):
    """Bad flag combination or unparseable option value (exit code 2)."""


def _parse_forecaster(spec: str, dataset):
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "ar1":
            if len(parts) not in (3, 4):
                raise ConfigError("ar1 forecaster needs ar1:PHI:SIGMA[:MU]")
            mu = float(parts[3]) if len(parts) == 4 else 0.0
            return GaussianAR1Forecaster(float(parts[1]), float(parts[2]), mu)
        if kind == "seasonal-naive":
            return SeasonalNaiveForecaster(dataset.seasonality)
        if kind == "biased":
            if len(parts) not in (4, 5):
                raise ConfigError("biased forecaster needs biased:B:PHI:SIGMA[:MU]")
            mu = float(parts[4]) if len(parts) == 5 else 0.0
            inner = GaussianAR1Forecaster(float(parts[2]), float(parts[3]), mu)
            return BiasedDriftForecaster(inner, float(parts[1]))
        if kind == "external":
            if len(parts) < 2:
                raise ConfigError("external forecaster needs external:PATH")
            return ExternalForecaster(load_external_forecasts(":".join(parts[1:])))
    except ValueError as exc:
        raise ConfigError(f"bad forecaster spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown forecaster kind {kind!r}")


def _parse_copula_source(spec: str):
    """Return a callable (context, horizon) -> CopulaParams."""
    if spec == "auto":
        return lambda ctx, h: CopulaParams(rho=estimate_rho(ctx), horizon=h)
    if spec.startswith("fixed:"):
        try:
            rho = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad copula spec {spec!r}") from exc
        return lambda ctx, h: CopulaParams(rho=rho, horizon=h)
    if spec.startswith("module:"):
        net_spec, weights = load_checkpoint(spec.split(":", 1)[1])

        def from_module(ctx, h):
            scale = float(np.max(ctx))
            if scale <= 0.0:
                return CopulaParams(rho=0.0, horizon=h)
            return predict_params(net_spec, weights, np.asarray(ctx) / scale, h)

        return from_module
    raise ConfigError(f"unknown copula source {spec!r}")


def _load_dataset(args):
    if args.format == "tsf":
        ds = parse_tsf(args.dataset, allow_negative=args.allow_negative)
        if args.horizon is not None:
            ds = replace(ds, horizon=args.horizon)
        if args.seasonality is not None:
            ds = replace(ds, seasonality=args.seasonality)
    else:
        if args.horizon is None:
            raise ConfigError("--horizon is required with --format csv")
        ds = parse_csv_long(
            args.dataset,
            horizon=args.horizon,
            seasonality=args.seasonality or 1,
            allow_negative=args.allow_negative,
        )
    return split(ds)


def _baseline_scores(ts, seasonality: int, holdout) -> SeriesScores:
    """Deterministic seasonal-naive baseline, collapsing to the last value
    when the context is shorter than one season."""
    try:
        sn = SeasonalNaiveForecaster(seasonality)
        point = sn.point_forecast(ts.context, holdout.size)
    except ContextTooShort:
        sn = SeasonalNaiveForecaster(1)
        point = sn.point_forecast(ts.context, holdout.size)
    c_total, c_by_h = crps_point(point, holdout)
    vs = variogram_score(point, holdout)
    return SeriesScores(crps_total=c_total, vs_total=vs, crps_by_horizon=c_by_h)


def _score_paths(paths, holdout) -> SeriesScores:
    c_total, c_by_h = crps(paths, holdout)
    vs = variogram_score(paths, holdout)
    return SeriesScores(crps_total=c_total, vs_total=vs, crps_by_horizon=c_by_h)


def _generate_series(ts, dataset, handle, methods, copula_source, args):
    """Generate all requested methods for one series.

    Returns {method: (SamplePaths, attributed_time)}.  The single forward
    pass shared by naive and copula is timed once and attributed to each,
    since either method alone would have to pay for it.
    """
    nonneg = not args.allow_negative
    seed_sid = derive_seed(args.seed, ts.id)
    h = dataset.horizon
    out = {}
    fc = None
    t_fc = 0.0
    if "naive" in methods or "copula" in methods:
        t0 = time.perf_counter()
        fc = forecast(
            handle,
            ForecastRequest(ts.context, horizon=h, series_id=ts.id),
        )
        t_fc = time.perf_counter() - t0
    if "naive" in methods:
        sp = generate_naive(fc, args.paths, seed_sid, nonneg=nonneg)
        out["naive"] = (sp, t_fc + sp.wall_time)
    if "copula" in methods:
        t0 = time.perf_counter()
        params = copula_source(ts.context, h)
        t_params = time.perf_counter() - t0
        sp = generate_copula(fc, params, args.paths, seed_sid, nonneg=nonneg)
        out["copula"] = (sp, t_fc + t_params + sp.wall_time)
    if "autoregressive" in methods:
        sp = generate_autoregressive(
            handle,
            ts.context,
            h,
            args.paths,
            seed_sid,
            nonneg=nonneg,
            series_id=ts.id,
        )
        out["autoregressive"] = (sp, sp.wall_time)
    return out


def _run_generation(dataset, methods, args):
    handle = _parse_forecaster(args.forecaster, dataset)
    copula_source = _parse_copula_source(args.copula)

    def worker(ts):
        return ts.id, ts, _generate_series(ts, dataset, handle, methods, copula_source, args)

    series = sorted(dataset.series, key=lambda ts: ts.id)
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(worker, series))
    else:
        results = [worker(ts) for ts in series]
    return results


def _timing_summary(results, methods, args, dataset):
    timing = {"methods": {}, "speedup": {}, "n_series": len(results)}
    for m in methods:
        wall = sum(res[m][1] for _, _, res in results)
        passes = sum(res[m][0].forward_passes for _, _, res in results)
        timing["methods"][m] = {"wall_time_s": wall, "forward_passes": passes}
    if "autoregressive" in methods:
        t_ar = timing["methods"]["autoregressive"]["wall_time_s"]
        for m in methods:
            if m == "autoregressive":
                continue
            t_m = timing["methods"][m]["wall_time_s"]
            if t_m > 0:
                timing["speedup"][f"autoregressive_vs_{m}"] = t_ar / t_m
    timing["config"] = {"n_paths": args.paths, "horizon": dataset.horizon}
    return timing


def _write_manifest(out_dir: Path, command: str, args) -> None:
    skip = {"func"}
    config = {k: v for k, v in vars(args).items() if k not in skip}
    manifest = {"command": command, "config": config, "seed": args.seed,
                "version": __version__}
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _methods_from_args(args):
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
    if not methods:
        raise ConfigError("no methods requested")
    return methods


def _score_results(dataset, results, methods) -> ScoreReport:
    scores_by_method = {m: {} for m in methods}
    by_horizon = {m: {} for m in methods}
    baselines = {}
    for sid, ts, res in results:
        baselines[sid] = _baseline_scores(ts, dataset.seasonality, ts.holdout)
        for m in methods:
            s = _score_paths(res[m][0], ts.holdout)
            scores_by_method[m][sid] = s
            by_horizon[m][sid] = s.crps_by_horizon
    per_series = {}
    aggregates = {"methods": {}}
    for m in methods:
        norm = normalize_and_aggregate(scores_by_method[m], baselines)
        aggregates["methods"][m] = {
            "median_normalized_crps": norm.median_crps,
            "median_normalized_vs": norm.median_vs,
            "dropped_series": norm.dropped_series,
        }
        per_series[m] = {
            sid: {
                "scores": s,
                "normalized_crps": norm.per_series_crps.get(sid, ""),
                "normalized_vs": norm.per_series_vs.get(sid, ""),
            }
            for sid, s in scores_by_method[m].items()
        }
    if "autoregressive" in methods and "copula" in methods:
        imp = pct_improvement_by_horizon(
            by_horizon["autoregressive"], by_horizon["copula"]
        )
        aggregates["median_pct_improvement_by_horizon"] = {
            "copula_vs_autoregressive": [None if np.isnan(v) else v for v in imp]
        }
    return ScoreReport(per_series=per_series, aggregates=aggregates)


def cmd_generate(args) -> int:
    dataset = _load_dataset(args)
    methods = _methods_from_args(args)
    results = _run_generation(dataset, methods, args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths_by_series = [(sid, res[m][0]) for sid, _, res in results for m in methods]
    report = {"rows": [], "aggregates": {}, "timing": _timing_summary(results, methods, args, dataset)}
    emit_results(report, paths_by_series, out_dir)
    _write_manifest(out_dir, "generate", args)
    return 0


def cmd_bench(args) -> int:
    dataset = _load_dataset(args)
    methods = _methods_from_args(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    try:
        results = _run_generation(dataset, methods, args)
        report = _score_results(dataset, results, methods)
    except Exception:
        # flush whatever was generated before surfacing the error
        if results:
            paths_by_series = [
                (sid, res[m][0]) for sid, _, res in results for m in methods
            ]
            emit_results({"rows": [], "aggregates": {}, "timing": {}},
                         paths_by_series, out_dir)
        raise
    timing = _timing_summary(results, methods, args, dataset)
    paths_by_series = [(sid, res[m][0]) for sid, _, res in results for m in methods]
    emit_results(
        {"rows": report.rows(), "aggregates": report.aggregates, "timing": timing},
        paths_by_series,
        out_dir,
    )
    _write_manifest(out_dir, "bench", args)
    return 0


def cmd_snowball(args) -> int:
    dataset = _load_dataset(args)
    methods = ("copula", "autoregressive")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = _run_generation(dataset, methods, args)
    report = _score_results(dataset, results, methods)
    imp = report.aggregates["median_pct_improvement_by_horizon"]["copula_vs_autoregressive"]
    with open(out_dir / "improvement_by_horizon.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["horizon", "median_pct_crps_improvement"])
        for i, v in enumerate(imp, start=1):
            writer.writerow([i, "" if v is None else repr(float(v))])
    with open(out_dir / "improvement_by_horizon.json", "w", encoding="utf-8") as fh:
        json.dump(
            {"median_pct_crps_improvement": imp, "n_series": len(results)},
            fh, indent=2, sort_keys=True,
        )
        fh.write("\n")
    timing = _timing_summary(results, methods, args, dataset)
    paths_by_series = [(sid, res[m][0]) for sid, _, res in results for m in methods]
    emit_results(
        {"rows": report.rows(), "aggregates": report.aggregates, "timing": timing},
        paths_by_series,
        out_dir,
    )
    _write_manifest(out_dir, "snowball", args)
    return 0


def cmd_score(args) -> int:
    dataset = _load_dataset(args)
    holdouts = {ts.id: ts for ts in dataset.series}
    grouped: dict = {}
    with open(args.paths_file, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            key = (row["series_id"], row["method"])
            h_cols = [c for c in reader.fieldnames if c.startswith("h")]
            grouped.setdefault(key, []).append(
                (int(row["path_index"]), [float(row[c]) for c in h_cols])
            )
    scores_by_method: dict = {}
    baselines = {}
    for (sid, method), entries in sorted(grouped.items()):
        ts = holdouts.get(sid)
        if ts is None:
            logger.warning("series %s in paths file but not in dataset; skipped", sid)
            continue
        entries.sort()
        paths = np.asarray([vals for _, vals in entries])
        s = (
            _score_paths(paths, ts.holdout)
            if paths.shape[0] > 1
            else SeriesScores(
                crps_total=crps_point(paths[0], ts.holdout)[0],
                vs_total=variogram_score(paths, ts.holdout),
                crps_by_horizon=crps_point(paths[0], ts.holdout)[1],
            )
        )
        scores_by_method.setdefault(method, {})[sid] = s
        if sid not in baselines:
            baselines[sid] = _baseline_scores(ts, dataset.seasonality, ts.holdout)
    aggregates = {"methods": {}}
    per_series_out: dict = {}
    for method, per_series in scores_by_method.items():
        norm = normalize_and_aggregate(per_series, baselines)
        aggregates["methods"][method] = {
            "median_normalized_crps": norm.median_crps,
            "median_normalized_vs": norm.median_vs,
            "dropped_series": norm.dropped_series,
        }
        per_series_out[method] = {
            sid: {
                "scores": s,
                "normalized_crps": norm.per_series_crps.get(sid, ""),
                "normalized_vs": norm.per_series_vs.get(sid, ""),
            }
            for sid, s in per_series.items()
        }
    report = ScoreReport(per_series=per_series_out, aggregates=aggregates)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    emit_results(
        {"rows": report.rows(), "aggregates": report.aggregates, "timing": {}},
        [],
        out_dir,
    )
    _write_manifest(out_dir, "score", args)
    return 0


def cmd_train(args) -> int:
    dataset = _load_dataset(args)
    handle = _parse_forecaster(args.forecaster, dataset)
    config = TrainingConfig(epochs=args.epochs)
    h = config.horizon
    pairs = []
    for ts in dataset.series:
        if ts.values.size > h + (30 if args.backbone == "mlp" else 1):
            pairs.append((ts.values[:-h], ts.values[-h:]))
    spec = NetworkSpec(
        backbone=args.backbone,
        output_params="rho_beta" if args.params == "rho-beta" else "rho",
    )
    weights = init_weights(spec, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = train(spec, weights, pairs, config, args.seed, handle)
    save_checkpoint(out_dir / "checkpoint.json", spec, result.weights)
    with open(out_dir / "loss_curve.json", "w", encoding="utf-8") as fh:
        json.dump(
            {"epoch_mean_vs": result.epoch_losses,
             "skipped_series": result.skipped_series},
            fh, indent=2, sort_keys=True,
        )
        fh.write("\n")
    _write_manifest(out_dir, "train", args)
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", required=True, help="input dataset path")
    parser.add_argument("--format", choices=("tsf", "csv"), default="tsf")
    parser.add_argument("--horizon", type=int, default=None,
                        help="forecast horizon (required for csv)")
    parser.add_argument("--seasonality", type=int, default=None,
                        help="seasonal period for csv datasets")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--allow-negative", action="store_true",
                        help="accept negative values; disables the left-tail "
                             "truncation at zero")


def _add_generation(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--forecaster", required=True,
                        help="ar1:PHI:SIGMA[:MU] | seasonal-naive | "
                             "biased:B:PHI:SIGMA[:MU] | external:FILE")
    parser.add_argument("--methods", default="naive,copula,autoregressive")
    parser.add_argument("--paths", type=int, default=10,
                        help="sample paths per series (default 10)")
    parser.add_argument("--copula", default="auto",
                        help="auto | fixed:RHO | module:CHECKPOINT")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copulapaths",
        description="Correlated sample paths from quantile forecasts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write sample paths")
    _add_common(p)
    _add_generation(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="generate and score all methods")
    _add_common(p)
    _add_generation(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("snowball", help="per-horizon improvement of copula "
                                        "over autoregressive")
    _add_common(p)
    _add_generation(p)
    p.set_defaults(func=cmd_snowball)

    p = sub.add_parser("score", help="score a paths.csv against a dataset")
    _add_common(p)
    p.add_argument("--paths-file", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train", help="train the copula parameter predictor")
    _add_common(p)
    p.add_argument("--forecaster", required=True)
    p.add_argument("--backbone", choices=("mlp", "gru"), default="gru")
    p.add_argument("--params", choices=("rho", "rho-beta"), default="rho")
    p.add_argument("--epochs", type=int, default=10)
    p.set_defaults(func=cmd_train)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CopulaPathsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
