"""Synthetic desk-scale corpus with a known best forecaster per building.

Three archetypes share one synthetic weather record:

``weekly``
    A fixed weekly profile plus a seasonal random walk: every weekly slot
    drifts by an independent innovation each week.  Last week's value at the
    same slot is then the best predictor, so the weekly naive forecast wins.
``linear``
    An affine function of temperature (current and one day earlier), hour,
    and weekday with small iid noise, so a linear model is exactly specified.
``threshold``
    Temperature-threshold regimes switched on during one part of the day
    (cooling above a high threshold in the afternoon or evening, heating
    below a low one at night or in the morning), a step function trees
    capture and a linear model cannot.

With ``noise = 0`` every archetype is noiseless; ``weekly`` is then
exactly 336-periodic.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd

from ..errors import ConfigError
from ..ingest import STEPS_PER_DAY, STEPS_PER_WEEK, LoadSeries, WeatherSeries, build_corpus
from ..kinds import ModelKind

ARCHETYPES = ("weekly", "linear", "threshold")
EXPECTED_WINNER = {
    "weekly": ModelKind.WeeklyNaive,
    "linear": ModelKind.LinReg,
    "threshold": ModelKind.GBM,
}
_WEATHER_STREAM = 2**32 - 1


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of :func:`synth_corpus`.

    Parameters
    ----------
    n_buildings : int, default=120
    mix : tuple of float, default=(1, 1, 1)
        Relative shares of the weekly, linear and threshold archetypes;
        counts are apportioned by largest remainder (ties to the earlier
        archetype).
    noise : float, default=1.0
        Multiplier on every archetype's noise scale; 0 gives noiseless series.
    weeks : int, default=8
        Series length in weeks (at least 8).
    start : str, default="2023-01-02T00:00:00Z"
        First timestamp; a Monday midnight keeps weeks aligned.
    seed : int, default=0
    """

    n_buildings: int = 120
    mix: tuple = (1.0, 1.0, 1.0)
    noise: float = 1.0
    weeks: int = 8
    start: str = "2023-01-02T00:00:00Z"
    seed: int = 0

    def __post_init__(self):
        if int(self.n_buildings) < 1:
            raise ConfigError("synth.n_buildings must be >= 1")
        if len(self.mix) != len(ARCHETYPES) or any(m < 0 for m in self.mix) or sum(self.mix) <= 0:
            raise ConfigError("synth.mix needs three non-negative shares with a positive sum")
        if self.noise < 0:
            raise ConfigError("synth.noise must be >= 0")
        if int(self.weeks) < 8:
            raise ConfigError("synth.weeks must be >= 8")
        object.__setattr__(self, "mix", tuple(float(m) for m in self.mix))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mix"] = list(self.mix)
        return d


def apportion(n: int, shares) -> list[int]:
    """Split ``n`` items by ``shares`` using the largest-remainder rule."""
    shares = np.asarray(shares, dtype=float)
    exact = n * shares / shares.sum()
    counts = np.floor(exact).astype(int)
    order = sorted(range(len(shares)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[: n - counts.sum()]:
        counts[i] += 1
    return counts.tolist()


def synth_weather(index: pd.DatetimeIndex, seed: int) -> WeatherSeries:
    """Hourly weather spanning ``index`` (one extra hour at the end)."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _WEATHER_STREAM]))
    hours = pd.date_range(index[0], index[-1] + pd.Timedelta(hours=1), freq="h")
    n = len(hours)
    n_days = n // 24 + 2
    # day-to-day anomaly: AR(1) with unit-variance innovations scaled to ~4 degC
    anomaly = np.empty(n_days)
    anomaly[0] = rng.normal(0, 4.0)
    for d in range(1, n_days):
        anomaly[d] = 0.6 * anomaly[d - 1] + rng.normal(0, 3.2)
    day = np.arange(n) // 24
    frac = (np.arange(n) % 24) / 24.0
    # smooth the daily anomaly across midnight by linear interpolation
    daily = anomaly[day] + (anomaly[day + 1] - anomaly[day]) * frac
    diurnal = 5.0 * np.sin(2 * np.pi * (frac - 0.375))
    trend = 4.0 * np.sin(2 * np.pi * np.arange(n) / (24 * 365.25))
    temperature = 11.0 + trend + daily + diurnal + rng.normal(0, 0.4, n)
    dew_point = temperature - 3.0 - np.abs(rng.normal(0, 1.5, n))
    wind_speed = np.abs(4.0 + np.cumsum(rng.normal(0, 0.3, n)) * 0.2 + rng.normal(0, 1.0, n))
    relative_humidity = np.clip(100.0 - 5.0 * (temperature - dew_point), 5.0, 100.0)
    return WeatherSeries(hours, temperature, dew_point, wind_speed, relative_humidity)


def _slot_hours(index):
    return np.asarray(index.hour) + np.asarray(index.minute) / 60.0


def _weekly(rng, index, noise):
    n = len(index)
    level = rng.uniform(1.0, 4.0)
    h = _slot_hours(index[:STEPS_PER_WEEK])
    dow = np.asarray(index[:STEPS_PER_WEEK].dayofweek)
    # distinct daily shapes per weekday, so the profile is not hour + day additive
    phase = rng.uniform(0, 2 * np.pi, 7)
    amp = rng.uniform(0.2, 0.6, 7)
    profile = 1.0 + amp[dow] * np.sin(2 * np.pi * h / 24 + phase[dow])
    profile += 0.3 * np.sin(4 * np.pi * h / 24 + phase[(dow + 3) % 7])
    profile = level * (profile - profile.min() + 0.8)
    n_weeks = -(-n // STEPS_PER_WEEK)
    steps = rng.normal(0, 0.06 * level * noise, (n_weeks, STEPS_PER_WEEK))
    steps[0] = 0.0
    walk = np.cumsum(steps, axis=0)
    values = (profile[None, :] + walk).ravel()[:n]
    return values


def _linear(rng, index, temp, temp_prev, noise):
    n = len(index)
    level = rng.uniform(1.0, 4.0)
    hour = np.asarray(index.hour)
    dow = np.asarray(index.dayofweek)
    hour_effect = rng.uniform(-0.3, 0.3, 24)
    dow_effect = rng.uniform(-0.15, 0.15, 7)
    sign = rng.choice([-1.0, 1.0])
    a = sign * rng.uniform(0.05, 0.09)
    b = sign * rng.uniform(0.01, 0.03)
    shape = 2.0 + a * (temp - 11.0) + b * (temp_prev - 11.0) + hour_effect[hour] + dow_effect[dow]
    return level * (shape + rng.normal(0, 0.03 * noise, n))


def _threshold(rng, index, temp, noise):
    n = len(index)
    level = rng.uniform(1.0, 4.0)
    hour = np.asarray(index.hour)
    part = hour // 6
    # thresholds inside the observed range keep both regimes active
    hi = np.quantile(temp, rng.uniform(0.5, 0.65))
    lo = np.quantile(temp, rng.uniform(0.25, 0.4))
    cool_part = rng.choice([2, 3])
    heat_part = rng.choice([0, 1])
    cooling = (temp > hi) & (part == cool_part)
    heating = (temp < lo) & (part == heat_part)
    base = 1.0 + 0.1 * np.sin(2 * np.pi * hour / 24)
    shape = base + rng.uniform(1.2, 1.8) * cooling + rng.uniform(0.8, 1.2) * heating
    return level * (shape + rng.normal(0, 0.03 * noise, n))


def synth_series(spec: SynthSpec):
    """Raw load series, weather and the archetype of every building id."""
    index = pd.date_range(pd.Timestamp(spec.start), periods=int(spec.weeks) * STEPS_PER_WEEK,
                          freq="30min")
    weather = synth_weather(index, spec.seed)
    pos = np.searchsorted(weather.timestamps.asi8, index.asi8, side="right") - 1
    temp = weather.temperature[pos]
    temp_prev = np.concatenate([np.full(STEPS_PER_DAY, temp[0]), temp[:-STEPS_PER_DAY]])

    counts = apportion(int(spec.n_buildings), spec.mix)
    kinds = np.repeat(np.arange(len(ARCHETYPES)), counts)
    order = np.random.default_rng(np.random.SeedSequence([int(spec.seed), _WEATHER_STREAM - 1]))
    kinds = order.permutation(kinds)
    width = max(3, len(str(spec.n_buildings - 1)))
    series, truth = [], {}
    for i, k in enumerate(kinds):
        rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), i]))
        archetype = ARCHETYPES[k]
        if archetype == "weekly":
            values = _weekly(rng, index, spec.noise)
        elif archetype == "linear":
            values = _linear(rng, index, temp, temp_prev, spec.noise)
        else:
            values = _threshold(rng, index, temp, spec.noise)
        bid = f"b{i:0{width}d}"
        series.append(LoadSeries(bid, index[0], np.asarray(values, dtype=float)))
        truth[bid] = archetype
    return series, weather, truth


def synth_corpus(spec: SynthSpec | None = None, **overrides):
    """Cleaned corpus and ``building_id -> archetype`` ground truth.

    Returns ``(corpus, truth)``; buildings discarded by the cleaning step
    (none in practice) are absent from both.
    """
    spec = spec or SynthSpec()
    if overrides:
        spec = SynthSpec(**{**spec.to_dict(), **overrides})
    series, weather, truth = synth_series(spec)
    corpus, dropped = build_corpus(series, weather)
    for bid in dropped:
        truth.pop(bid, None)
    return corpus, truth
