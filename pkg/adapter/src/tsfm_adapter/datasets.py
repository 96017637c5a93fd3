"""Minimal dataset readers (Monash TSF and long CSV).

The adapter only needs series ids, values, and the horizon; the scoring
side owns the richer dataset model.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_HORIZON = {
    "hourly": 48,
    "daily": 14,
    "weekly": 13,
    "monthly": 18,
    "quarterly": 8,
    "yearly": 6,
    "other": 8,
}


@dataclass(frozen=True)
class Series:
    id: str
    values: np.ndarray


@dataclass(frozen=True)
class AdapterDataset:
    name: str
    horizon: int | None
    series: tuple


def read_tsf(path) -> AdapterDataset:
    path = Path(path)
    attr_names: list[str] = []
    horizon = None
    frequency = None
    in_data = False
    series = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("@"):
                parts = line.split()
                tag = parts[0].lower()
                if tag == "@attribute" and len(parts) == 3:
                    attr_names.append(parts[1])
                elif tag == "@horizon" and len(parts) == 2:
                    horizon = int(parts[1])
                elif tag == "@frequency" and len(parts) == 2:
                    frequency = parts[1].lower()
                elif tag == "@data":
                    in_data = True
                continue
            if not in_data:
                raise ValueError(f"{path}:{line_no}: data row before @data")
            fields = line.split(":")
            tokens = fields[-1].split(",")
            if "?" in (t.strip() for t in tokens):
                continue  # missing values: series skipped
            values = np.asarray([float(t) for t in tokens], dtype=float)
            sid = fields[0] if attr_names else f"T{len(series)}"
            if "series_name" in attr_names:
                sid = fields[attr_names.index("series_name")]
            series.append(Series(id=sid, values=values))
    if horizon is None and frequency in DEFAULT_HORIZON:
        horizon = DEFAULT_HORIZON[frequency]
    if not series:
        raise ValueError(f"{path}: no usable series")
    return AdapterDataset(name=path.stem, horizon=horizon, series=tuple(series))


def read_csv_long(path) -> AdapterDataset:
    path = Path(path)
    rows: dict[str, list[tuple[float, float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(row["series_id"], []).append(
                (float(row["t"]), float(row["value"]))
            )
    series = []
    for sid, pts in rows.items():
        pts.sort(key=lambda p: p[0])
        series.append(Series(id=sid, values=np.asarray([v for _, v in pts])))
    if not series:
        raise ValueError(f"{path}: no usable series")
    return AdapterDataset(name=path.stem, horizon=None, series=tuple(series))


def read_dataset(path) -> AdapterDataset:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv_long(path)
    return read_tsf(path)
