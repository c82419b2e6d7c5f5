"""Predict the best day-ahead forecaster of a building from series features."""
__version__ = "0.1.0"

from .errors import (ConfigError, DataError, ForecastabilityError,  # noqa: E402
                     StageFailed)
from .kinds import ALL_KINDS, ModelKind  # noqa: E402

__all__ = ["__version__", "ConfigError", "DataError", "ForecastabilityError", "StageFailed",
           "ALL_KINDS", "ModelKind"]
