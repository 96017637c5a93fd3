"""Dataset ingestion, context/holdout splitting, and results emission.

Reads the Monash TSF layout (``@attribute``/``@frequency``/``@horizon``
headers, then ``@data`` with colon-separated attributes and comma-separated
values, ``?`` for missing) and a long CSV format (``series_id,t,value``).
Series containing missing values are excluded rather than imputed, so
downstream correlation estimates are never contaminated.  All numeric
output uses shortest round-trip decimal formatting.
"""

import csv
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, NegativeValues, ParseError

logger = logging.getLogger(__name__)

# Per-frequency defaults used when a TSF header omits @horizon.  These are
# the prevailing values in the M-competition collections; files whose
# conventions differ should carry explicit headers.
DEFAULT_HORIZON = {
    "hourly": 48,
    "daily": 14,
    "weekly": 13,
    "monthly": 18,
    "quarterly": 8,
    "yearly": 6,
    "other": 8,
}
SEASONALITY = {
    "hourly": 24,
    "daily": 7,
    "weekly": 52,
    "monthly": 12,
    "quarterly": 4,
    "yearly": 1,
    "other": 1,
}


@dataclass(frozen=True, slots=True)
class TimeSeries:
    """One series with its context/holdout split (populated by :func:`split`)."""

    id: str
    values: np.ndarray
    context: np.ndarray | None = None
    holdout: np.ndarray | None = None


@dataclass(frozen=True, slots=True)
class Dataset:
    name: str
    frequency: str
    seasonality: int
    horizon: int
    series: tuple
    excluded_missing: int = 0
    excluded_short: int = 0


def _check_nonneg(values: np.ndarray, sid: str, allow_negative: bool) -> None:
    if not allow_negative and np.any(values < 0.0):
        raise NegativeValues(
            f"series {sid!r} contains negative values; pass allow_negative to accept"
        )


def parse_tsf(path, allow_negative: bool = False, name: str | None = None) -> Dataset:
    """Parse a Monash TSF file into a Dataset (unsplit).

    Header metadata wins over the per-frequency defaults; series containing
    ``?`` are excluded and counted.
    """
    path = Path(path)
    attr_names: list[str] = []
    frequency = None
    horizon = None
    in_data = False
    series: list[TimeSeries] = []
    excluded = 0
    auto_id = 0

    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("@"):
                if in_data:
                    raise ParseError("metadata after @data", line=line_no)
                parts = line.split()
                tag = parts[0].lower()
                if tag == "@attribute":
                    if len(parts) != 3:
                        raise ParseError("@attribute needs a name and a type", line=line_no)
                    attr_names.append(parts[1])
                elif tag == "@frequency":
                    if len(parts) != 2:
                        raise ParseError("@frequency needs one value", line=line_no)
                    frequency = parts[1].lower()
                elif tag == "@horizon":
                    if len(parts) != 2:
                        raise ParseError("@horizon needs one value", line=line_no)
                    try:
                        horizon = int(parts[1])
                    except ValueError as exc:
                        raise ParseError(f"bad horizon: {parts[1]!r}", line=line_no) from exc
                elif tag == "@data":
                    in_data = True
                # @missing / @equallength and unknown tags carry no
                # information we act on
                continue
            if not in_data:
                raise ParseError("data row before @data tag", line=line_no)
            fields = line.split(":")
            if len(fields) != len(attr_names) + 1:
                raise ParseError(
                    f"expected {len(attr_names)} attributes plus values, "
                    f"got {len(fields) - 1}",
                    line=line_no,
                )
            tokens = fields[-1].split(",")
            if "?" in (t.strip() for t in tokens):
                excluded += 1
                continue
            try:
                values = np.asarray([float(t) for t in tokens], dtype=float)
            except ValueError as exc:
                raise ParseError(f"bad numeric value: {exc}", line=line_no) from exc
            if not np.all(np.isfinite(values)):
                raise ParseError("non-finite series value", line=line_no)
            if "series_name" in attr_names:
                sid = fields[attr_names.index("series_name")]
            elif attr_names:
                sid = fields[0]
            else:
                sid = f"T{auto_id}"
                auto_id += 1
            _check_nonneg(values, sid, allow_negative)
            series.append(TimeSeries(id=sid, values=values))

    if not in_data:
        raise ParseError("missing @data section", line=None)
    if not series:
        raise EmptyDataset(f"{path} contains no usable series")
    if excluded:
        logger.warning("%s: excluded %d series with missing values", path.name, excluded)

    freq = frequency or "other"
    if horizon is None:
        if frequency is None or frequency not in DEFAULT_HORIZON:
            raise ParseError(
                f"no @horizon and no default for frequency {frequency!r}", line=None
            )
        horizon = DEFAULT_HORIZON[frequency]
    return Dataset(
        name=name or path.stem,
        frequency=freq,
        seasonality=SEASONALITY.get(freq, 1),
        horizon=horizon,
        series=tuple(series),
        excluded_missing=excluded,
    )


def write_tsf(dataset: Dataset, path) -> None:
    """Serialize a dataset back to the TSF layout (series_name attribute only)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("@attribute series_name string\n")
        fh.write(f"@frequency {dataset.frequency}\n")
        fh.write(f"@horizon {dataset.horizon}\n")
        fh.write("@data\n")
        for ts in dataset.series:
            vals = ",".join(repr(float(v)) for v in ts.values)
            fh.write(f"{ts.id}:{vals}\n")


def parse_csv_long(
    path,
    horizon: int,
    seasonality: int = 1,
    allow_negative: bool = False,
    name: str | None = None,
) -> Dataset:
    """Parse a long-format CSV with columns series_id, t, value."""
    path = Path(path)
    rows: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"series_id", "t", "value"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ParseError(f"CSV must have columns {sorted(required)}", line=1)
        for line_no, row in enumerate(reader, start=2):
            try:
                rows.setdefault(row["series_id"], []).append(
                    (float(row["t"]), float(row["value"]))
                )
            except (TypeError, ValueError) as exc:
                raise ParseError(f"bad CSV row: {exc}", line=line_no) from exc
    if not rows:
        raise EmptyDataset(f"{path} contains no rows")
    series = []
    for sid, pts in rows.items():
        pts.sort(key=lambda p: p[0])
        values = np.asarray([v for _, v in pts], dtype=float)
        if not np.all(np.isfinite(values)):
            raise ParseError(f"non-finite value in series {sid!r}", line=None)
        _check_nonneg(values, sid, allow_negative)
        series.append(TimeSeries(id=sid, values=values))
    return Dataset(
        name=name or path.stem,
        frequency="other",
        seasonality=seasonality,
        horizon=horizon,
        series=tuple(series),
    )


def split(dataset: Dataset) -> Dataset:
    """Populate context/holdout; the holdout is the final ``horizon`` points.

    Series shorter than ``horizon + 3`` cannot support both the holdout and
    a lag-1 correlation estimate, so they are excluded with a warning.
    """
    h = dataset.horizon
    kept = []
    short = 0
    for ts in dataset.series:
        if ts.values.size <= h + 2:
            short += 1
            continue
        kept.append(
            replace(ts, context=ts.values[:-h].copy(), holdout=ts.values[-h:].copy())
        )
    if short:
        logger.warning("%s: excluded %d series too short for split", dataset.name, short)
    if not kept:
        raise EmptyDataset(f"{dataset.name}: no series long enough for horizon {h}")
    return replace(dataset, series=tuple(kept), excluded_short=short)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_results(report: dict, paths_by_series: list, out_dir) -> dict:
    """Write scores.csv, aggregates.json, paths.csv and timing.json.

    ``report`` carries ``rows`` (list of per-series, per-method dicts),
    ``aggregates`` and ``timing`` mappings; ``paths_by_series`` is a list of
    (series_id, SamplePaths).  Rows are sorted before writing so reruns are
    byte-identical.  Returns the paths of the written files.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}

    rows = sorted(report.get("rows", []), key=lambda r: (r["series_id"], r["method"]))
    horizon = max((len(r.get("crps_by_horizon", ())) for r in rows), default=0)
    scores_path = out / "scores.csv"
    with open(scores_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["series_id", "method", "crps_total", "vs_total",
                  "normalized_crps", "normalized_vs"]
        header += [f"crps_h{i + 1}" for i in range(horizon)]
        writer.writerow(header)
        for r in rows:
            by_h = list(r.get("crps_by_horizon", ()))
            by_h += [""] * (horizon - len(by_h))
            writer.writerow(
                [r["series_id"], r["method"], _fmt(r["crps_total"]), _fmt(r["vs_total"]),
                 _fmt(r.get("normalized_crps", "")), _fmt(r.get("normalized_vs", ""))]
                + [_fmt(v) if v != "" else "" for v in by_h]
            )
    written["scores"] = scores_path

    agg_path = out / "aggregates.json"
    with open(agg_path, "w", encoding="utf-8") as fh:
        json.dump(report.get("aggregates", {}), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written["aggregates"] = agg_path

    paths_path = out / "paths.csv"
    with open(paths_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        h_max = max((sp.horizon for _, sp in paths_by_series), default=0)
        writer.writerow(["series_id", "method", "path_index"]
                        + [f"h{i + 1}" for i in range(h_max)])
        ordered = sorted(paths_by_series, key=lambda t: (t[0], t[1].method))
        for sid, sp in ordered:
            for n in range(sp.n_paths):
                writer.writerow([sid, sp.method, n] + [_fmt(v) for v in sp.paths[n]])
    written["paths"] = paths_path

    timing_path = out / "timing.json"
    with open(timing_path, "w", encoding="utf-8") as fh:
        json.dump(report.get("timing", {}), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written["timing"] = timing_path
    return written
