import numpy as np
import pandas as pd
import pytest
from hypothesis import HealthCheck, settings

from forecastability.ingest import (STEPS_PER_WEEK, LoadSeries, WeatherSeries, align_covariates)

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

START = pd.Timestamp("2023-01-02T00:00:00Z")  # a Monday


def make_weather(n_steps, start=START, seed=0, freq="h"):
    """Weather covering ``n_steps`` half-hours from ``start``."""
    rng = np.random.default_rng(seed)
    idx = pd.date_range(start, start + pd.Timedelta(minutes=30 * n_steps), freq=freq)
    t = 10 + 5 * np.sin(np.arange(len(idx)) / 7.0) + rng.normal(0, 1, len(idx))
    return WeatherSeries(idx, t, t - 3, np.abs(rng.normal(4, 1, len(idx))),
                         np.clip(70 + rng.normal(0, 5, len(idx)), 0, 100))


def make_pair(values, bid="b", start=START, seed=0):
    series = LoadSeries(bid, start, np.asarray(values, dtype=float))
    return series, align_covariates(series, make_weather(len(series), start, seed))


@pytest.fixture
def periodic_pair():
    """Noiseless 336-periodic series of six weeks with covariates."""
    rng = np.random.default_rng(3)
    profile = rng.uniform(0.5, 2.0, STEPS_PER_WEEK)
    return make_pair(np.tile(profile, 6))


@pytest.fixture
def noisy_pair():
    rng = np.random.default_rng(5)
    n = 6 * STEPS_PER_WEEK
    t = np.arange(n)
    values = 2 + np.sin(2 * np.pi * t / 48) + 0.3 * rng.normal(size=n)
    return make_pair(values)


# pass/fail lines of the acceptance criteria, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
