import io
import json
from datetime import datetime, timedelta, timezone

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, strategies as st

from forecastability.errors import (AllMissing, CoverageGap, DuplicateTimestamp, MalformedRow,
                                    NonUniformStep)
from forecastability.ingest import (LoadSeries, WeatherSeries, align_covariates, build_corpus,
                                    calendar_columns, derive_calendar, discard_zero_mean,
                                    impute_nearest, parse_meter_csv, parse_weather_csv,
                                    read_corpus_archive, write_corpus_archive, write_meter_csv)

from .conftest import START, make_pair, make_weather


def zeller_weekday(y, m, d):
    """Monday = 0 via Zeller's congruence (independent of datetime)."""
    if m < 3:
        m += 12
        y -= 1
    k, j = y % 100, y // 100
    h = (d + (13 * (m + 1)) // 5 + k + k // 4 + j // 4 + 5 * j) % 7  # 0 = Saturday
    return (h + 5) % 7


def csv(text):
    return io.StringIO(text)


# -- parsing ------------------------------------------------------------------

def test_four_half_hourly_rows_give_length_four():
    text = ("building_id,timestamp,kwh\n"
            "A,2013-01-01T00:00:00Z,0.5\nA,2013-01-01T00:30:00Z,0.6\n"
            "A,2013-01-01T01:00:00Z,0.7\nA,2013-01-01T01:30:00Z,0.8\n")
    (s,) = parse_meter_csv(csv(text))
    assert s.building_id == "A"
    assert len(s) == 4
    np.testing.assert_array_equal(s.values, [0.5, 0.6, 0.7, 0.8])
    assert s.start == pd.Timestamp("2013-01-01T00:00:00Z")


def test_sixty_minute_gap_inserts_one_missing_slot():
    text = ("building_id,timestamp,kwh\n"
            "A,2013-01-01T00:00:00Z,1\nA,2013-01-01T00:30:00Z,2\nA,2013-01-01T01:30:00Z,4\n")
    (s,) = parse_meter_csv(csv(text))
    assert len(s) == 4
    assert np.isnan(s.values[2])
    assert s.n_missing == 1


def test_rows_are_sorted_and_ids_split():
    text = ("building_id,timestamp,kwh\n"
            "B,2013-01-01T00:30:00Z,2\nA,2013-01-01T00:30:00Z,20\n"
            "B,2013-01-01T00:00:00Z,1\nA,2013-01-01T00:00:00Z,10\n")
    a, b = parse_meter_csv(csv(text))
    assert (a.building_id, b.building_id) == ("A", "B")
    np.testing.assert_array_equal(a.values, [10, 20])
    np.testing.assert_array_equal(b.values, [1, 2])


def test_duplicate_timestamp_rejected():
    text = "building_id,timestamp,kwh\nA,2013-01-01T00:00:00Z,1\nA,2013-01-01T00:00:00Z,2\n"
    with pytest.raises(DuplicateTimestamp):
        parse_meter_csv(csv(text))


def test_off_grid_timestamp_rejected():
    text = "building_id,timestamp,kwh\nA,2013-01-01T00:00:00Z,1\nA,2013-01-01T00:40:00Z,2\n"
    with pytest.raises(NonUniformStep):
        parse_meter_csv(csv(text))


def test_bad_timestamp_reports_line_number():
    text = ("building_id,timestamp,kwh\nA,2013-01-01T00:00:00Z,1\n"
            "A,not-a-time,2\n")
    with pytest.raises(MalformedRow) as info:
        parse_meter_csv(csv(text))
    assert info.value.line == 3


def test_unparseable_and_negative_kwh_become_missing():
    text = ("building_id,timestamp,kwh\nA,2013-01-01T00:00:00Z,abc\n"
            "A,2013-01-01T00:30:00Z,-1\nA,2013-01-01T01:00:00Z,3\n")
    (s,) = parse_meter_csv(csv(text))
    assert np.isnan(s.values[:2]).all()
    assert s.values[2] == 3


def test_column_map_and_timestamp_format():
    text = "LCLid,DateTime,KWH/hh\nMAC1,2013-01-01 00:00:00.0000000,0.25\nMAC1,2013-01-01 00:30:00.0000000,0.5\n"
    (s,) = parse_meter_csv(csv(text), {"id": "LCLid", "timestamp": "DateTime", "kwh": "KWH/hh"},
                           "%Y-%m-%d %H:%M:%S.%f0")
    np.testing.assert_array_equal(s.values, [0.25, 0.5])


def test_missing_column_is_malformed():
    with pytest.raises(MalformedRow):
        parse_meter_csv(csv("id,timestamp,kwh\nA,2013-01-01T00:00:00Z,1\n"))


@given(st.lists(st.lists(st.one_of(st.none(), st.floats(0, 1e6, allow_nan=False)),
                         min_size=1, max_size=30), min_size=1, max_size=4))
def test_write_then_parse_is_a_fixpoint(columns):
    series = []
    for i, col in enumerate(columns):
        vals = np.array([np.nan if v is None else v for v in col], dtype=float)
        # the parser anchors a series at its first row, so keep the first value
        if np.isnan(vals[0]):
            vals[0] = 1.0
        if np.isnan(vals[-1]):
            vals[-1] = 1.0
        series.append(LoadSeries(f"id{i}", START + pd.Timedelta(hours=i), vals))
    text = write_meter_csv(series)
    parsed = parse_meter_csv(csv(text))
    assert write_meter_csv(parsed) == text
    for a, b in zip(series, parsed):
        assert a.start == b.start
        np.testing.assert_array_equal(a.values, b.values)


def test_weather_csv_round_trip():
    text = ("timestamp,temperature,dew_point,wind_speed,relative_humidity\n"
            "2013-01-01T01:00:00Z,2,1,3,80\n2013-01-01T00:00:00Z,1,0,2,90\n")
    w = parse_weather_csv(csv(text))
    np.testing.assert_array_equal(w.temperature, [1, 2])
    assert w.step == pd.Timedelta(hours=1)


# -- imputation -------------------------------------------------------------

@pytest.mark.parametrize("raw, expected", [
    ([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]),
    ([np.nan, 2.0], [2.0, 2.0]),
    ([1.0, np.nan, 3.0], [1.0, 1.0, 3.0]),
    ([1.0, np.nan, np.nan, 4.0], [1.0, 1.0, 4.0, 4.0]),
    ([np.nan, np.nan, 5.0, np.nan], [5.0, 5.0, 5.0, 5.0]),
])
def test_impute_nearest_examples(raw, expected):
    out = impute_nearest(LoadSeries("a", START, raw))
    np.testing.assert_array_equal(out.values, expected)


def test_impute_all_missing_raises():
    with pytest.raises(AllMissing):
        impute_nearest(LoadSeries("a", START, [np.nan, np.nan]))


def brute_force_impute(vals):
    out = vals.copy()
    known = [i for i, v in enumerate(vals) if not np.isnan(v)]
    for i, v in enumerate(vals):
        if np.isnan(v):
            j = min(known, key=lambda k: (abs(k - i), k))  # earlier wins ties
            out[i] = vals[j]
    return out


missing_vectors = st.lists(st.one_of(st.none(), st.floats(0, 100, allow_nan=False)),
                           min_size=1, max_size=40).filter(lambda v: any(x is not None for x in v))


@given(missing_vectors)
def test_impute_matches_brute_force_and_is_idempotent(raw):
    vals = np.array([np.nan if v is None else v for v in raw], dtype=float)
    once = impute_nearest(LoadSeries("a", START, vals)).values
    np.testing.assert_array_equal(once, brute_force_impute(vals))
    observed = ~np.isnan(vals)
    np.testing.assert_array_equal(once[observed], vals[observed])
    twice = impute_nearest(LoadSeries("a", START, once)).values
    np.testing.assert_array_equal(twice, once)


# -- zero-mean discard --------------------------------------------------------

def test_discard_zero_mean():
    corpus = {"A": make_pair(np.zeros(48 * 3), "A"), "B": make_pair(np.ones(48 * 3), "B"),
              "C": make_pair(np.full(48 * 3, 0.5), "C")}
    kept, dropped = discard_zero_mean(corpus)
    assert sorted(kept) == ["B", "C"]
    assert dropped == ["A"]
    kept2, dropped2 = discard_zero_mean(kept)
    assert sorted(kept2) == ["B", "C"] and dropped2 == []
    assert min(np.mean(s.values) for s, _ in kept.values()) > 0


# -- calendar -----------------------------------------------------------------

def test_calendar_examples():
    c = derive_calendar("2013-01-15T18:30:00Z")
    assert (c.hour_of_day, c.part_of_day, c.is_workday, c.day_of_week, c.month, c.season) == \
        (18, "evening", True, 1, 1, "winter")
    assert zeller_weekday(2013, 1, 15) == 1
    c = derive_calendar("2013-06-02T03:00:00Z")
    assert (c.part_of_day, c.is_workday, c.season, c.day_of_week) == ("night", False, "summer", 6)
    assert zeller_weekday(2013, 6, 2) == 6
    c = derive_calendar("2020-03-01T00:00:00Z")
    assert (c.hour_of_day, c.part_of_day, c.season) == (0, "night", "spring")


def _oracle(t):
    dow = zeller_weekday(t.year, t.month, t.day)
    part = ["night", "morning", "afternoon", "evening"][sum(t.hour >= b for b in (6, 12, 18))]
    season = {12: "winter", 1: "winter", 2: "winter", 3: "spring", 4: "spring", 5: "spring",
              6: "summer", 7: "summer", 8: "summer"}.get(t.month, "autumn")
    return t.hour, part, dow <= 4, dow, t.month, season


def test_calendar_agrees_with_civil_oracle_on_1000_timestamps():
    rng = np.random.default_rng(0)
    base = datetime(1990, 1, 1, tzinfo=timezone.utc)
    for minutes in rng.integers(0, 60 * 24 * 365 * 60, 1000):
        t = base + timedelta(minutes=int(minutes))
        c = derive_calendar(t)
        got = (c.hour_of_day, c.part_of_day, c.is_workday, c.day_of_week, c.month, c.season)
        assert got == _oracle(t)


@given(st.datetimes(min_value=datetime(1970, 1, 1), max_value=datetime(2100, 1, 1)))
def test_vectorised_calendar_matches_scalar(t):
    t = pd.Timestamp(t, tz="UTC")
    row = calendar_columns(pd.DatetimeIndex([t])).iloc[0]
    c = derive_calendar(t)
    assert row["hour"] == c.hour_of_day
    assert row["day_of_week"] == c.day_of_week
    assert row["is_workday"] == int(c.is_workday)
    assert ["night", "morning", "afternoon", "evening"][row["part_of_day"]] == c.part_of_day
    assert ["winter", "spring", "summer", "autumn"][row["season"]] == c.season


# -- alignment ----------------------------------------------------------------

def test_hourly_weather_fills_two_rows_each():
    idx = pd.date_range(START, periods=3, freq="h")
    w = WeatherSeries(idx, [1.0, 2.0, 3.0], [0, 0, 0], [0, 0, 0], [50, 50, 50])
    frame = align_covariates(LoadSeries("a", START, np.ones(4)), w)
    np.testing.assert_array_equal(frame.data["temperature"], [1, 1, 2, 2])
    assert len(frame) == 4


def test_half_hourly_weather_copied_verbatim():
    idx = pd.date_range(START, periods=4, freq="30min")
    temps = [3.0, 1.0, 4.0, 1.5]
    w = WeatherSeries(idx, temps, temps, temps, temps)
    frame = align_covariates(LoadSeries("a", START, np.ones(4)), w)
    np.testing.assert_array_equal(frame.data["temperature"], temps)


def test_weather_ending_a_day_early_is_a_coverage_gap():
    n = 48 * 4
    w = make_weather(n - 48)
    with pytest.raises(CoverageGap):
        align_covariates(LoadSeries("a", START, np.ones(n)), w)


def test_weather_starting_late_is_a_coverage_gap():
    w = make_weather(48, start=START + pd.Timedelta(hours=1))
    with pytest.raises(CoverageGap):
        align_covariates(LoadSeries("a", START, np.ones(10)), w)


# -- corpus archive -------------------------------------------------------------

def test_corpus_archive_round_trip(tmp_path):
    n = 48 * 3
    series = [LoadSeries("x/1", START, np.r_[np.nan, np.arange(1, n)] / 7),
              LoadSeries("zero", START, np.zeros(n))]
    corpus, dropped = build_corpus(series, make_weather(n))
    assert dropped == ["zero"]
    write_corpus_archive(corpus, tmp_path, dropped)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    entries = {e["building_id"]: e for e in manifest["buildings"]}
    assert entries["zero"]["discarded"] is True
    assert entries["x/1"]["length"] == n and entries["x/1"]["step"] == 1800
    back, discarded = read_corpus_archive(tmp_path)
    assert discarded == ["zero"]
    s0, f0 = corpus["x/1"]
    s1, f1 = back["x/1"]
    np.testing.assert_array_equal(s0.values, s1.values)
    pd.testing.assert_frame_equal(f0.data, f1.data, check_freq=False)
