"""Bridge from multi-step forecasting models to QF-JSONL files.

Queries a model (built-in toy backends, or a Chronos-family checkpoint via
the optional ``chronos`` extra) for per-horizon quantile forecasts over a
dataset and writes them in the QF-JSONL wire format, optionally including
the per-path autoregressive traces needed to replay model-in-the-loop
sampling offline.
"""

from .datasets import AdapterDataset, Series, read_csv_long, read_dataset, read_tsf
from .export import (
    DEFAULT_LEVELS,
    AdapterJob,
    derive_seed,
    export_autoregressive_trace,
    export_multistep,
)
from .iqf import KnotSampler, repair_monotone
from .models import ChronosModel, ToyDriftModel, ToySeasonalModel, resolve_model

__version__ = "0.1.0"

__all__ = [
    "AdapterDataset",
    "AdapterJob",
    "ChronosModel",
    "DEFAULT_LEVELS",
    "KnotSampler",
    "Series",
    "ToyDriftModel",
    "ToySeasonalModel",
    "derive_seed",
    "export_autoregressive_trace",
    "export_multistep",
    "read_csv_long",
    "read_dataset",
    "read_tsf",
    "repair_monotone",
    "resolve_model",
    "__version__",
]
