"""Exception types shared across the package."""


class CopulaPathsError(Exception):
    """Base class for all errors raised by this package."""


class InvalidKnots(CopulaPathsError):
    """Quantile knots are unusable (non-finite, too few, bad levels)."""


class InvalidProbability(CopulaPathsError):
    """A probability argument fell outside the open interval (0, 1)."""


class EmptyHorizon(CopulaPathsError):
    """A horizon of zero steps was requested."""


class NotPositiveDefinite(CopulaPathsError):
    """Cholesky factorization hit a non-positive pivot."""


class SeriesTooShort(CopulaPathsError):
    """A time series is too short for the requested operation."""


class ContextTooShort(CopulaPathsError):
    """Forecast context shorter than the forecaster's minimum."""


class MissingExternalForecast(CopulaPathsError):
    """No stored forecast for the requested (series_id, context_length)."""


class HorizonMismatch(CopulaPathsError):
    """Horizon lengths of two inputs disagree."""


class TooFewPaths(CopulaPathsError):
    """An estimator needs more sample paths than were supplied."""


class NoComparableSeries(CopulaPathsError):
    """Score normalization found no series shared with the baseline."""


class ParseError(CopulaPathsError):
    """Malformed input file.  Carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDataset(CopulaPathsError):
    """A dataset file contained no usable series."""


class NegativeValues(CopulaPathsError):
    """Input series contain negative values and --allow-negative is off."""


class NonFiniteLoss(CopulaPathsError):
    """Training produced a NaN or infinite loss."""
