"""Persistence forecasts: repeat the same slot of the previous day or week."""
from __future__ import annotations

import numpy as np

from ..errors import InsufficientHistory
from ..ingest import STEPS_PER_DAY, STEPS_PER_WEEK


def _persistence(series, origin, horizon, period):
    values = np.asarray(getattr(series, "values", series), dtype=float)
    if horizon <= 0 or horizon > period:
        raise ValueError(f"horizon must be in 1..{period} for a period-{period} persistence forecast")
    if origin < period:
        raise InsufficientHistory(f"origin {origin} needs {period} steps of history")
    if origin > len(values):
        raise ValueError(f"origin {origin} beyond series of length {len(values)}")
    return values[origin - period: origin - period + horizon].copy()


def forecast_daily_naive(series, origin: int, horizon: int = STEPS_PER_DAY) -> np.ndarray:
    """``forecast[h] = series[origin - 48 + h]``."""
    return _persistence(series, origin, horizon, STEPS_PER_DAY)


def forecast_weekly_naive(series, origin: int, horizon: int = STEPS_PER_DAY) -> np.ndarray:
    """``forecast[h] = series[origin - 336 + h]``."""
    return _persistence(series, origin, horizon, STEPS_PER_WEEK)
