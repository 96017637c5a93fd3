"""Correlated sample paths from per-horizon quantile forecasts.

Multi-step forecasters emit independent marginal distributions per future
step; this package couples those marginals with a Gaussian copula to
produce correlated trajectories in a single forward pass, and ships the
scoring harness (CRPS, variogram score, baseline normalization, cost
accounting) used to compare copula-based, naive-independent, and
autoregressive generation.
"""

from . import errors
from .copula import (
    CholeskyFactor,
    CopulaParams,
    build_covariance,
    cholesky_ar1,
    cholesky_dense,
    estimate_rho,
    norm_cdf,
    norm_inv_cdf,
    sample_copula_uniforms,
)
from .data_io import Dataset, TimeSeries, parse_csv_long, parse_tsf, split, write_tsf
from .forecasters import (
    FORWARD_PASSES,
    BiasedDriftForecaster,
    ExternalForecaster,
    ForecastRequest,
    GaussianAR1Forecaster,
    MultiStepForecast,
    SeasonalNaiveForecaster,
    fit_ar1_forecaster,
    forecast,
    load_external_forecasts,
)
from .iqf import (
    DEFAULT_LEVELS,
    MarginalDistribution,
    QuantileKnots,
    cdf,
    fit_iqf,
    quantile,
    repair_monotone,
)
from .pathgen import (
    SamplePaths,
    derive_seed,
    fit_marginals,
    generate_autoregressive,
    generate_copula,
    generate_naive,
)
from .predictor import (
    NetworkSpec,
    TrainingConfig,
    adam_step,
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

__version__ = "0.1.0"

__all__ = [
    "BiasedDriftForecaster",
    "CholeskyFactor",
    "CopulaParams",
    "Dataset",
    "DEFAULT_LEVELS",
    "ExternalForecaster",
    "FORWARD_PASSES",
    "ForecastRequest",
    "GaussianAR1Forecaster",
    "MarginalDistribution",
    "MultiStepForecast",
    "NetworkSpec",
    "QuantileKnots",
    "SamplePaths",
    "ScoreReport",
    "SeasonalNaiveForecaster",
    "SeriesScores",
    "TimeSeries",
    "TrainingConfig",
    "adam_step",
    "build_covariance",
    "cdf",
    "cholesky_ar1",
    "cholesky_dense",
    "crps",
    "crps_point",
    "derive_seed",
    "errors",
    "estimate_rho",
    "fit_ar1_forecaster",
    "fit_iqf",
    "fit_marginals",
    "forecast",
    "generate_autoregressive",
    "generate_copula",
    "generate_naive",
    "init_weights",
    "load_checkpoint",
    "load_external_forecasts",
    "norm_cdf",
    "norm_inv_cdf",
    "normalize_and_aggregate",
    "parse_csv_long",
    "parse_tsf",
    "pct_improvement_by_horizon",
    "predict_params",
    "quantile",
    "repair_monotone",
    "sample_copula_uniforms",
    "save_checkpoint",
    "split",
    "train",
    "variogram_score",
    "write_tsf",
    "__version__",
]
