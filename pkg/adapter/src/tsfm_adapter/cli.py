"""Command-line entry point for QF-JSONL export."""

import argparse
import logging
import sys

from .export import (
    DEFAULT_LEVELS,
    AdapterJob,
    export_autoregressive_trace,
    export_multistep,
)
from .models import resolve_model


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsfm-adapter",
        description="Export multi-step quantile forecasts as QF-JSONL.",
    )
    parser.add_argument("--model", required=True,
                        help="toy:drift | toy:seasonal[:M] | chronos:MODEL_ID")
    parser.add_argument("--dataset", required=True, help="TSF or long-CSV path")
    parser.add_argument("--horizon", type=int, required=True)
    parser.add_argument("--levels", default=None,
                        help="comma-separated quantile levels (default deciles)")
    parser.add_argument("--autoregressive", type=int, default=0, metavar="N",
                        help="also materialize an N-path autoregressive trace")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--allow-negative", action="store_true")
    parser.add_argument("--out", required=True, help="output QF-JSONL file")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        model = resolve_model(args.model)
        levels = (
            tuple(float(v) for v in args.levels.split(","))
            if args.levels
            else DEFAULT_LEVELS
        )
        job = AdapterJob(
            model=model,
            dataset_path=args.dataset,
            horizon=args.horizon,
            levels=levels,
            autoregressive_paths=args.autoregressive,
            seed=args.seed,
            nonneg=not args.allow_negative,
        )
        if args.autoregressive > 0:
            summary = export_autoregressive_trace(job, args.out)
        else:
            summary = export_multistep(job, args.out)
        print(f"wrote {summary['records']} records to {args.out} "
              f"({summary['failures']} series skipped)")
        return 0
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
