"""Domain-agnostic statistics of a series (population moments throughout)."""
from __future__ import annotations

from functools import cached_property

import numpy as np

from ..errors import TooShort
from .registry import AGNOSTIC, register_feature


def pvar(a) -> float:
    """Population variance, exactly 0 for a constant input."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return float("nan")
    if np.ptp(a) == 0:
        return 0.0
    return float(np.mean((a - a.mean()) ** 2))


def pskew(a) -> float:
    """Population skewness m3 / m2**1.5, 0 for a constant input."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return float("nan")
    if np.ptp(a) == 0:
        return 0.0
    d = a - a.mean()
    m2 = np.mean(d**2)
    return float(np.mean(d**3) / m2**1.5)


def acf(a, lag: int) -> float:
    """Population autocorrelation; 0 for a constant input, NaN if too short."""
    a = np.asarray(a, dtype=float)
    if lag >= a.size:
        return float("nan")
    if np.ptp(a) == 0:
        return 0.0
    d = a - a.mean()
    return float(np.dot(d[:-lag], d[lag:]) / np.dot(d, d))


class SeriesStats:
    """Per-series cache handed to every agnostic feature function."""

    def __init__(self, values, window: int = 48):
        self.x = np.asarray(values, dtype=float)
        self.window = int(window)

    @cached_property
    def tiles(self) -> np.ndarray:
        """Non-overlapping full windows, one per row."""
        k = self.x.size // self.window
        return self.x[: k * self.window].reshape(k, self.window)

    @cached_property
    def mean(self) -> float:
        return float(np.mean(self.x))


def _ratio(num, den):
    return float(num / den) if den != 0 else float("nan")


@register_feature(AGNOSTIC, "series_length", "number of observations", 0)
def _series_length(s):
    return float(s.x.size)


@register_feature(AGNOSTIC, "mean", "arithmetic mean", 1)
def _mean(s):
    return s.mean


@register_feature(AGNOSTIC, "variance", "population variance", 2)
def _variance(s):
    return pvar(s.x)


@register_feature(AGNOSTIC, "skewness", "population skewness m3/m2^1.5; 0 when variance is 0", 0)
def _skewness(s):
    return pskew(s.x)


@register_feature(AGNOSTIC, "max", "maximum value", 1)
def _max(s):
    return float(np.max(s.x))


@register_feature(AGNOSTIC, "min", "minimum value", 1)
def _min(s):
    return float(np.min(s.x))


@register_feature(AGNOSTIC, "sparsity", "fraction of values exactly zero", 0)
def _sparsity(s):
    return float(np.mean(s.x == 0))


@register_feature(AGNOSTIC, "stability",
                  "population variance of the means of non-overlapping windows (width 48)", 2)
def _stability(s):
    return pvar(s.tiles.mean(axis=1))


@register_feature(AGNOSTIC, "lumpiness",
                  "population variance of the population variances of non-overlapping windows (width 48)", 4)
def _lumpiness(s):
    return pvar([pvar(row) for row in s.tiles])


@register_feature(AGNOSTIC, "acf_lag1", "population autocorrelation at lag 1", 0)
def _acf1(s):
    return acf(s.x, 1)


@register_feature(AGNOSTIC, "acf_lag48", "population autocorrelation at lag 48 (one day)", 0)
def _acf48(s):
    return acf(s.x, 48)


@register_feature(AGNOSTIC, "acf_lag336", "population autocorrelation at lag 336 (one week)", 0)
def _acf336(s):
    return acf(s.x, 336)


@register_feature(AGNOSTIC, "crossing_points",
                  "number of times consecutive values lie on opposite sides of the mean, / (n - 1)", 0)
def _crossing_points(s):
    above = s.x > s.mean
    return float(np.count_nonzero(above[1:] != above[:-1]) / (s.x.size - 1))


@register_feature(AGNOSTIC, "flat_spots", "longest run of equal consecutive values / n", 0)
def _flat_spots(s):
    change = np.flatnonzero(np.diff(s.x) != 0)
    bounds = np.concatenate([[-1], change, [s.x.size - 1]])
    return float(np.max(np.diff(bounds)) / s.x.size)


@register_feature(AGNOSTIC, "coefficient_of_variation", "population standard deviation / mean", 0)
def _cv(s):
    return _ratio(np.sqrt(pvar(s.x)), s.mean)


@register_feature(AGNOSTIC, "range_ratio", "max / mean", 0)
def _range_ratio(s):
    return _ratio(np.max(s.x), s.mean)


def check_length(values, window: int = 48) -> None:
    n = np.asarray(values).size
    if n < 2 * window:
        raise TooShort(f"series of length {n} is shorter than two windows of {window}")
