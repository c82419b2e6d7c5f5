"""Supervised design matrices for direct day-ahead forecasting."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..errors import ConfigError, InsufficientHistory
from ..ingest import PARTS_OF_DAY, SEASONS, WEATHER_COLUMNS, CovariateFrame, LoadSeries


@dataclass(frozen=True)
class WindowConfig:
    """Lag layout of the supervised problem.

    Every target lag must be at least ``horizon`` so that all lagged loads of
    a 48-step forecast lie strictly before the forecast origin.
    """

    horizon: int = 48
    target_lags: tuple = (48, 336)
    covariate_lookback: int = 48
    covariate_lookforward: int = 48

    def __post_init__(self):
        object.__setattr__(self, "target_lags", tuple(sorted({int(x) for x in self.target_lags})))
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        if not self.target_lags or min(self.target_lags) <= 0:
            raise ConfigError("target lags must be positive")
        if min(self.target_lags) < self.horizon:
            raise ConfigError("every target lag must be >= horizon (direct forecasting)")
        if self.covariate_lookback < 0 or self.covariate_lookforward < 0:
            raise ConfigError("covariate windows must be non-negative")

    @property
    def max_lag(self) -> int:
        return max(self.target_lags)

    @property
    def min_history(self) -> int:
        """First target index for which every feature is defined."""
        return max(self.max_lag, self.horizon + 47, self.covariate_lookback)

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "target_lags": list(self.target_lags),
                "covariate_lookback": self.covariate_lookback,
                "covariate_lookforward": self.covariate_lookforward}


@dataclass
class SupervisedSet:
    """Design matrix ``X`` (named columns) and target ``y`` for target indices ``positions``."""

    X: pd.DataFrame
    y: np.ndarray
    positions: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.positions is None:
            self.positions = np.asarray(self.X.index, dtype=np.int64)
        if len(self.X) != len(self.y):
            raise ValueError("X and y row counts differ")

    def __len__(self):
        return len(self.y)

    @property
    def columns(self) -> list[str]:
        return list(self.X.columns)

    def rows(self, start, stop) -> "SupervisedSet":
        """Rows whose target index lies in ``[start, stop)``."""
        mask = (self.positions >= start) & (self.positions < stop)
        return SupervisedSet(self.X.loc[mask], self.y[mask], self.positions[mask])


def calendar_onehots(calendar: pd.DataFrame) -> dict[str, np.ndarray]:
    """One-hot blocks for every calendar attribute, in a fixed column order."""
    out = {}
    hour = calendar["hour"].to_numpy()
    for h in range(24):
        out[f"hour_{h}"] = (hour == h).astype(float)
    part = calendar["part_of_day"].to_numpy()
    for i, name in enumerate(PARTS_OF_DAY):
        out[f"part_{name}"] = (part == i).astype(float)
    out["workday"] = calendar["is_workday"].to_numpy().astype(float)
    dow = calendar["day_of_week"].to_numpy()
    for d in range(7):
        out[f"dow_{d}"] = (dow == d).astype(float)
    month = calendar["month"].to_numpy()
    for m in range(1, 13):
        out[f"month_{m}"] = (month == m).astype(float)
    season = calendar["season"].to_numpy()
    for i, name in enumerate(SEASONS):
        out[f"season_{name}"] = (season == i).astype(float)
    return out


def build_supervised(series: LoadSeries, frame: CovariateFrame, cfg: WindowConfig,
                     start: int | None = None, stop: int | None = None) -> SupervisedSet:
    """One design row per target index ``t`` in ``[start, stop)``.

    Load features (reading only indices ``<= t - horizon``):

    - ``load_lag_L`` for each target lag ``L``
    - ``load_mean_day``: mean of the 48 values ending at ``t - horizon``
    - ``load_mean_week``: mean of ``series[t - max_lag : t - horizon + 1]``

    Covariates: weather at ``t`` (inside the look-forward window, taken as a
    perfect forecast), weather at ``t - covariate_lookback`` and one-hot
    calendar attributes of ``t``.
    """
    values = np.asarray(series.values, dtype=float)
    n = len(values)
    if len(frame) != n:
        raise ValueError("covariate frame length differs from the series")
    start = cfg.min_history if start is None else int(start)
    stop = n if stop is None else int(stop)
    if start < cfg.min_history:
        raise InsufficientHistory(f"range starts at {start}, needs >= {cfg.min_history}")
    if stop > n or stop < start:
        raise ValueError(f"range [{start}, {stop}) outside series of length {n}")
    if np.isnan(values[: stop]).any():
        raise ValueError("series contains missing values; impute first")

    t = np.arange(start, stop)
    h = cfg.horizon
    csum = np.concatenate([[0.0], np.cumsum(values)])
    cols = {}
    for lag in cfg.target_lags:
        cols[f"load_lag_{lag}"] = values[t - lag]
    # window sums via prefix sums: sum(values[a:b]) = csum[b] - csum[a]
    end = t - h + 1
    cols["load_mean_day"] = (csum[end] - csum[end - 48]) / 48.0
    width = cfg.max_lag - h + 1
    cols["load_mean_week"] = (csum[end] - csum[end - width]) / width

    weather = frame.weather()
    if cfg.covariate_lookforward > 0:
        for j, name in enumerate(WEATHER_COLUMNS):
            cols[name] = weather[t, j]
    if cfg.covariate_lookback > 0:
        for j, name in enumerate(WEATHER_COLUMNS):
            cols[f"{name}_lag_{cfg.covariate_lookback}"] = weather[t - cfg.covariate_lookback, j]
    cal = frame.calendar().iloc[start:stop]
    cols.update(calendar_onehots(cal))

    X = pd.DataFrame(cols, index=pd.Index(t, name="t"))
    return SupervisedSet(X, values[t].copy(), t)
