"""Load-shape features designed for half-hourly electricity demand.

Daily quantities use complete calendar days only (48 slots starting at
midnight).  The evening band is 18:00-22:00 and the overnight band
00:00-06:00.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from ..errors import TooShort
from ..ingest import SEASONS, STEPS_PER_DAY, CovariateFrame
from .agnostic import pskew, pvar
from .registry import INFORMED, register_feature

EVENING = slice(36, 44)
OVERNIGHT = slice(0, 12)
MIN_DAYS = 7


class LoadShape:
    """Per-series cache handed to every informed feature function."""

    def __init__(self, values, frame: CovariateFrame):
        self.x = np.asarray(values, dtype=float)
        if len(frame) != self.x.size:
            raise ValueError("covariate frame length differs from the series")
        cal = frame.calendar()
        self.hour = cal["hour"].to_numpy()
        self.minute = np.asarray(frame.index.minute)
        self.dow = cal["day_of_week"].to_numpy()
        self.workday = cal["is_workday"].to_numpy().astype(bool)
        self.season = cal["season"].to_numpy()
        self.slot = self.hour * 2 + self.minute // 30
        midnights = np.flatnonzero(self.slot == 0)
        self.first = int(midnights[0]) if midnights.size else self.x.size
        self.n_days = (self.x.size - self.first) // STEPS_PER_DAY
        if self.n_days < MIN_DAYS:
            raise TooShort(f"{self.n_days} complete days, need {MIN_DAYS}")

    @cached_property
    def days(self) -> np.ndarray:
        stop = self.first + self.n_days * STEPS_PER_DAY
        return self.x[self.first:stop].reshape(self.n_days, STEPS_PER_DAY)

    @cached_property
    def day_is_workday(self) -> np.ndarray:
        return self.workday[self.first::STEPS_PER_DAY][: self.n_days]

    @cached_property
    def base_load(self) -> float:
        return float(np.percentile(self.x, 2))


def _ratio(num, den):
    return float(num / den) if den != 0 else float("nan")


@register_feature(INFORMED, "mean_daily_consumption", "mean over complete days of daily total kWh", 1)
def _mean_daily(s):
    return float(s.days.sum(axis=1).mean())


@register_feature(INFORMED, "peak_value", "maximum half-hourly reading", 1)
def _peak(s):
    return float(np.max(s.x))


@register_feature(INFORMED, "base_load", "2nd percentile of half-hourly readings (linear interpolation)", 1)
def _base(s):
    return s.base_load


@register_feature(INFORMED, "load_factor", "mean / max", 0)
def _load_factor(s):
    return _ratio(np.mean(s.x), np.max(s.x))


@register_feature(INFORMED, "mean_peak_hour",
                  "mean over complete days of the hour-of-day holding the daily maximum (first if tied)", 0)
def _peak_hour(s):
    return float(np.mean(np.argmax(s.days, axis=1) // 2))


@register_feature(INFORMED, "evening_share", "fraction of energy of complete days drawn in 18:00-22:00", 0)
def _evening(s):
    return _ratio(s.days[:, EVENING].sum(), s.days.sum())


@register_feature(INFORMED, "overnight_share", "fraction of energy of complete days drawn in 00:00-06:00", 0)
def _overnight(s):
    return _ratio(s.days[:, OVERNIGHT].sum(), s.days.sum())


@register_feature(INFORMED, "weekday_weekend_ratio",
                  "mean reading on Monday-Friday days / mean reading on Saturday-Sunday days", 0)
def _weekday_weekend(s):
    wk = s.days[s.day_is_workday]
    we = s.days[~s.day_is_workday]
    if wk.size == 0 or we.size == 0:
        return float("nan")
    return _ratio(wk.mean(), we.mean())


def _season_mean(code):
    def feature(s):
        sel = s.x[s.season == code]
        return float(sel.mean()) if sel.size else float("nan")
    return feature


for _code, _name in enumerate(SEASONS):
    register_feature(INFORMED, f"season_mean_{_name}",
                     f"mean reading during {_name} (meteorological months); NaN if absent", 1)(
        _season_mean(_code))


@register_feature(INFORMED, "weekly_seasonality_strength",
                  "1 - var(series minus its mean weekly profile) / var(series); 0 for a constant series", 0)
def _weekly_strength(s):
    total = pvar(s.x)
    if total == 0:
        return 0.0
    slot_of_week = s.dow * STEPS_PER_DAY + s.slot
    sums = np.bincount(slot_of_week, weights=s.x, minlength=7 * STEPS_PER_DAY)
    counts = np.bincount(slot_of_week, minlength=7 * STEPS_PER_DAY)
    profile = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    resid = s.x - profile[slot_of_week]
    return float(1.0 - pvar(resid) / total)


@register_feature(INFORMED, "daily_profile_skewness",
                  "population skewness of the mean 48-slot daily profile", 0)
def _profile_skew(s):
    return pskew(s.days.mean(axis=0))


@register_feature(INFORMED, "peak_to_base_ratio", "peak_value / base_load", 0)
def _peak_to_base(s):
    return _ratio(np.max(s.x), s.base_load)
