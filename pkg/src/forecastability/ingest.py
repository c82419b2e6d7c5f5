"""Meter and weather ingestion, cleaning and covariate alignment.

Series are stored as half-hourly float arrays in which ``NaN`` is the
missing-marker.  Timestamps are always UTC.

Calendar encodings used throughout the package:

========== =========================================================
column     encoding
========== =========================================================
hour       0..23
part       0 night [00,06), 1 morning [06,12), 2 afternoon [12,18),
           3 evening [18,24)
workday    1 Monday-Friday, 0 Saturday/Sunday (no holiday calendar)
dow        0 Monday .. 6 Sunday
month      1..12
season     0 winter (Dec-Feb), 1 spring (Mar-May), 2 summer (Jun-Aug),
           3 autumn (Sep-Nov)
========== =========================================================
"""
from __future__ import annotations

import io
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd

from .errors import (
    AllMissing,
    CoverageGap,
    DataError,
    DuplicateTimestamp,
    MalformedRow,
    NonUniformStep,
)

STEP = pd.Timedelta(minutes=30)
STEPS_PER_DAY = 48
STEPS_PER_WEEK = 336

PARTS_OF_DAY = ("night", "morning", "afternoon", "evening")
SEASONS = ("winter", "spring", "summer", "autumn")

WEATHER_COLUMNS = ("temperature", "dew_point", "wind_speed", "relative_humidity")
CALENDAR_COLUMNS = ("hour", "part_of_day", "is_workday", "day_of_week", "month", "season")

DEFAULT_COLUMN_MAP = {"id": "building_id", "timestamp": "timestamp", "kwh": "kwh"}


def _utc(t) -> pd.Timestamp:
    t = pd.Timestamp(t)
    return t.tz_localize("UTC") if t.tzinfo is None else t.tz_convert("UTC")


@dataclass
class LoadSeries:
    """Half-hourly kWh readings of one building."""

    building_id: str
    start: pd.Timestamp
    values: np.ndarray
    step: pd.Timedelta = STEP

    def __post_init__(self):
        self.building_id = str(self.building_id)
        self.start = _utc(self.start)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("values must be one-dimensional")

    def __len__(self):
        return len(self.values)

    @property
    def timestamps(self) -> pd.DatetimeIndex:
        return pd.date_range(self.start, periods=len(self.values), freq=self.step)

    @property
    def n_missing(self) -> int:
        return int(np.isnan(self.values).sum())

    def copy(self, values=None) -> "LoadSeries":
        vals = self.values.copy() if values is None else np.asarray(values, dtype=float)
        return LoadSeries(self.building_id, self.start, vals, self.step)


@dataclass
class WeatherSeries:
    """Weather observations on one (possibly coarser than 30 min) timeline."""

    timestamps: pd.DatetimeIndex
    temperature: np.ndarray
    dew_point: np.ndarray
    wind_speed: np.ndarray
    relative_humidity: np.ndarray
    step: pd.Timedelta | None = None

    def __post_init__(self):
        idx = pd.DatetimeIndex(self.timestamps)
        self.timestamps = idx.tz_localize("UTC") if idx.tz is None else idx.tz_convert("UTC")
        for name in WEATHER_COLUMNS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (len(self.timestamps),):
                raise ValueError(f"weather channel {name} does not match the timeline")
            setattr(self, name, arr)
        if len(self.timestamps) and not self.timestamps.is_monotonic_increasing:
            raise ValueError("weather timestamps must be increasing")
        if self.step is None:
            if len(self.timestamps) > 1:
                self.step = pd.Timedelta(np.median(np.diff(self.timestamps.asi8)), unit="ns")
            else:
                self.step = STEP

    @property
    def start(self) -> pd.Timestamp:
        return self.timestamps[0]


@dataclass(frozen=True)
class CalendarFeatures:
    hour_of_day: int
    part_of_day: str
    is_workday: bool
    day_of_week: int
    month: int
    season: str


def derive_calendar(t) -> CalendarFeatures:
    """Calendar attributes of a single UTC timestamp."""
    t = _utc(t)
    dow = t.weekday()
    return CalendarFeatures(
        hour_of_day=t.hour,
        part_of_day=PARTS_OF_DAY[t.hour // 6],
        is_workday=dow < 5,
        day_of_week=dow,
        month=t.month,
        season=SEASONS[(t.month % 12) // 3],
    )


def calendar_columns(index: pd.DatetimeIndex) -> pd.DataFrame:
    """Vectorised :func:`derive_calendar` with integer codes."""
    hour = np.asarray(index.hour, dtype=np.int64)
    dow = np.asarray(index.dayofweek, dtype=np.int64)
    month = np.asarray(index.month, dtype=np.int64)
    return pd.DataFrame(
        {
            "hour": hour,
            "part_of_day": hour // 6,
            "is_workday": (dow < 5).astype(np.int64),
            "day_of_week": dow,
            "month": month,
            "season": (month % 12) // 3,
        },
        index=index,
    )


@dataclass
class CovariateFrame:
    """Weather and calendar covariates on the timeline of one LoadSeries."""

    data: pd.DataFrame

    def __post_init__(self):
        missing = [c for c in WEATHER_COLUMNS + CALENDAR_COLUMNS if c not in self.data]
        if missing:
            raise ValueError(f"covariate frame lacks columns {missing}")
        if self.data[list(WEATHER_COLUMNS)].isna().any().any():
            raise ValueError("covariate frame contains missing weather")

    def __len__(self):
        return len(self.data)

    @property
    def index(self) -> pd.DatetimeIndex:
        return self.data.index

    def weather(self) -> np.ndarray:
        return self.data[list(WEATHER_COLUMNS)].to_numpy(dtype=float)

    def calendar(self) -> pd.DataFrame:
        return self.data[list(CALENDAR_COLUMNS)]


# mapping building_id -> (LoadSeries, CovariateFrame)
Corpus = dict


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        return Path(source).read_text(encoding="utf-8")
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _parse_timestamps(raw: pd.Series, fmt: str | None) -> pd.Series:
    return pd.to_datetime(raw, format=fmt or "ISO8601", utc=True, errors="coerce")


def _cell_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return float("nan")


def _to_floats(raw: pd.Series) -> np.ndarray:
    """Correctly rounded string -> float; unparseable cells become NaN."""
    cells = raw.str.strip().to_numpy(dtype=str)
    try:
        return cells.astype(float)
    except ValueError:
        return np.fromiter((_cell_float(c) for c in cells), dtype=float, count=cells.size)


def _to_kwh(raw: pd.Series) -> np.ndarray:
    vals = _to_floats(raw)
    vals[~np.isfinite(vals) | (vals < 0)] = np.nan
    return vals


def parse_meter_csv(source, column_map: Mapping[str, str] | None = None,
                    timestamp_format: str | None = None) -> list[LoadSeries]:
    """Parse a long-format meter CSV into one LoadSeries per building.

    Parameters
    ----------
    source : path or file-like (text or bytes)
        UTF-8 CSV with a header row.
    column_map : mapping
        Keys ``id``, ``timestamp`` and ``kwh`` naming the CSV columns.
    timestamp_format : str, optional
        ``strptime`` format; ISO-8601 when omitted.

    Unparseable, negative or non-finite kWh cells become ``NaN``.  Gaps that
    are whole multiples of 30 minutes are filled with ``NaN`` slots.
    """
    cmap = dict(DEFAULT_COLUMN_MAP, **(column_map or {}))
    text = _read_text(source)
    try:
        df = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False,
                         skipinitialspace=False)
    except pd.errors.ParserError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise MalformedRow(int(m.group(1)) if m else 0, str(exc)) from exc
    for key in ("id", "timestamp", "kwh"):
        if cmap[key] not in df.columns:
            raise MalformedRow(1, f"missing column {cmap[key]!r}")
    if df.empty:
        return []

    ids = df[cmap["id"]].str.strip()
    ts = _parse_timestamps(df[cmap["timestamp"]].str.strip(), timestamp_format)
    bad = ids.eq("") | ts.isna()
    if bad.any():
        pos = int(np.flatnonzero(bad.to_numpy())[0])
        what = "empty id" if ids.iloc[pos] == "" else f"bad timestamp {df[cmap['timestamp']].iloc[pos]!r}"
        raise MalformedRow(pos + 2, what)

    frame = pd.DataFrame({"id": ids, "ts": ts, "kwh": _to_kwh(df[cmap["kwh"]])})
    frame["line"] = np.arange(len(frame)) + 2
    out = []
    for bid, grp in frame.groupby("id", sort=True):
        grp = grp.sort_values("ts", kind="stable")
        dup = grp["ts"].duplicated()
        if dup.any():
            line = int(grp.loc[dup, "line"].iloc[0])
            raise DuplicateTimestamp(f"building {bid!r}: repeated timestamp at line {line}")
        offsets = (grp["ts"] - grp["ts"].iloc[0]).to_numpy()
        step_ns = STEP.value
        ns = offsets.astype("timedelta64[ns]").astype(np.int64)
        if np.any(ns % step_ns):
            line = int(grp["line"].iloc[int(np.flatnonzero(ns % step_ns)[0])])
            raise NonUniformStep(f"building {bid!r}: off-grid timestamp at line {line}")
        slots = ns // step_ns
        values = np.full(int(slots[-1]) + 1, np.nan)
        values[slots] = grp["kwh"].to_numpy()
        out.append(LoadSeries(bid, grp["ts"].iloc[0], values))
    return out


def _fmt_ts(index: pd.DatetimeIndex) -> list[str]:
    return list(index.strftime("%Y-%m-%dT%H:%M:%SZ"))


def _fmt_float(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def write_meter_csv(series: list[LoadSeries], dest=None,
                    column_map: Mapping[str, str] | None = None) -> str:
    """Serialise series in the long format read by :func:`parse_meter_csv`."""
    cmap = dict(DEFAULT_COLUMN_MAP, **(column_map or {}))
    buf = io.StringIO()
    buf.write(f"{cmap['id']},{cmap['timestamp']},{cmap['kwh']}\n")
    for s in sorted(series, key=lambda s: s.building_id):
        for ts, v in zip(_fmt_ts(s.timestamps), s.values):
            buf.write(f"{s.building_id},{ts},{_fmt_float(v)}\n")
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text, encoding="utf-8")
    return text


def parse_weather_csv(source, timestamp_format: str | None = None) -> WeatherSeries:
    """Parse a weather CSV with columns timestamp + :data:`WEATHER_COLUMNS`."""
    df = pd.read_csv(io.StringIO(_read_text(source)), dtype=str, keep_default_na=False)
    for col in ("timestamp",) + WEATHER_COLUMNS:
        if col not in df.columns:
            raise MalformedRow(1, f"missing column {col!r}")
    ts = _parse_timestamps(df["timestamp"].str.strip(), timestamp_format)
    channels = {}
    for col in WEATHER_COLUMNS:
        channels[col] = _to_floats(df[col])
    bad = ts.isna().to_numpy() | np.any([~np.isfinite(v) for v in channels.values()], axis=0)
    if bad.any():
        raise MalformedRow(int(np.flatnonzero(bad)[0]) + 2, "bad weather row")
    order = np.argsort(ts.to_numpy(), kind="stable")
    idx = pd.DatetimeIndex(ts.to_numpy()[order])
    if idx.has_duplicates:
        raise DuplicateTimestamp("weather file repeats a timestamp")
    return WeatherSeries(idx, **{k: v[order] for k, v in channels.items()})


# --------------------------------------------------------------------------
# cleaning
# --------------------------------------------------------------------------

def impute_nearest(series: LoadSeries) -> LoadSeries:
    """Fill each missing value from the nearest observed index.

    Equidistant neighbours resolve to the earlier one.
    """
    vals = series.values
    miss = np.isnan(vals)
    if not miss.any():
        return series.copy()
    known = np.flatnonzero(~miss)
    if known.size == 0:
        raise AllMissing(f"building {series.building_id!r} has no observed values")
    gaps = np.flatnonzero(miss)
    right = np.searchsorted(known, gaps)
    prev = known[np.clip(right - 1, 0, None)]
    nxt = known[np.clip(right, None, known.size - 1)]
    has_prev = right > 0
    has_next = right < known.size
    d_prev = np.where(has_prev, gaps - prev, np.iinfo(np.int64).max)
    d_next = np.where(has_next, nxt - gaps, np.iinfo(np.int64).max)
    src = np.where(d_prev <= d_next, prev, nxt)
    out = vals.copy()
    out[gaps] = vals[src]
    return series.copy(out)


def discard_zero_mean(corpus: Corpus) -> tuple[Corpus, list[str]]:
    """Drop buildings whose mean consumption is not strictly positive."""
    kept, dropped = {}, []
    for bid in sorted(corpus):
        series = corpus[bid][0]
        if len(series) and np.mean(series.values) > 0:
            kept[bid] = corpus[bid]
        else:
            dropped.append(bid)
    return kept, dropped


def align_covariates(series: LoadSeries, weather: WeatherSeries) -> CovariateFrame:
    """Hold each weather observation until the next one, on the load timeline."""
    idx = series.timestamps
    wt = weather.timestamps
    if len(wt) == 0 or wt[0] > idx[0] or wt[-1] + weather.step <= idx[-1]:
        raise CoverageGap(
            f"weather {wt[0] if len(wt) else None}..{wt[-1] if len(wt) else None} "
            f"does not cover {idx[0]}..{idx[-1]}")
    pos = np.searchsorted(wt.asi8, idx.asi8, side="right") - 1
    data = {name: getattr(weather, name)[pos] for name in WEATHER_COLUMNS}
    frame = pd.DataFrame(data, index=idx)
    frame = pd.concat([frame, calendar_columns(idx)], axis=1)
    return CovariateFrame(frame)


def build_corpus(series: list[LoadSeries], weather: WeatherSeries) -> tuple[Corpus, list[str]]:
    """Impute, align and drop zero-mean buildings.

    Returns the cleaned corpus and the ids discarded for zero mean.
    """
    corpus = {}
    for s in sorted(series, key=lambda s: s.building_id):
        if s.building_id in corpus:
            raise DataError(f"duplicate building id {s.building_id!r}")
        clean = impute_nearest(s)
        corpus[s.building_id] = (clean, align_covariates(clean, weather))
    return discard_zero_mean(corpus)


# --------------------------------------------------------------------------
# cleaned-corpus archive
# --------------------------------------------------------------------------

def _safe_name(bid: str, i: int) -> str:
    stem = re.sub(r"[^A-Za-z0-9_.-]", "_", bid)[:64] or "building"
    return f"{i:05d}_{stem}.csv"


def write_corpus_archive(corpus: Corpus, directory, discarded=()) -> Path:
    """One CSV per retained building plus ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, bid in enumerate(sorted(corpus)):
        series, frame = corpus[bid]
        name = _safe_name(bid, i)
        table = pd.DataFrame({"timestamp": _fmt_ts(series.timestamps), "kwh": series.values})
        for col in WEATHER_COLUMNS:
            table[col] = frame.data[col].to_numpy()
        _atomic_write(directory / name, table.to_csv(index=False, float_format=None))
        entries.append({"building_id": bid, "start": _fmt_ts(pd.DatetimeIndex([series.start]))[0],
                        "step": int(series.step.total_seconds()), "length": len(series),
                        "discarded": False, "file": name})
    for bid in sorted(discarded):
        entries.append({"building_id": bid, "start": None, "step": int(STEP.total_seconds()),
                        "length": None, "discarded": True, "file": None})
    _atomic_write(directory / "manifest.json", json.dumps({"buildings": entries}, indent=2))
    return directory


def read_corpus_archive(directory) -> tuple[Corpus, list[str]]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    corpus, discarded = {}, []
    for entry in manifest["buildings"]:
        if entry["discarded"]:
            discarded.append(entry["building_id"])
            continue
        table = pd.read_csv(directory / entry["file"], float_precision="round_trip")
        idx = pd.DatetimeIndex(pd.to_datetime(table["timestamp"], utc=True)).rename(None)
        series = LoadSeries(entry["building_id"], idx[0], table["kwh"].to_numpy(dtype=float),
                            pd.Timedelta(seconds=entry["step"]))
        frame = pd.DataFrame({c: table[c].to_numpy(dtype=float) for c in WEATHER_COLUMNS}, index=idx)
        frame = pd.concat([frame, calendar_columns(idx)], axis=1)
        corpus[series.building_id] = (series, CovariateFrame(frame))
    return corpus, discarded


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


__all__ = [
    "STEP", "STEPS_PER_DAY", "STEPS_PER_WEEK", "PARTS_OF_DAY", "SEASONS",
    "WEATHER_COLUMNS", "CALENDAR_COLUMNS", "LoadSeries", "WeatherSeries",
    "CalendarFeatures", "CovariateFrame", "Corpus", "derive_calendar",
    "calendar_columns", "parse_meter_csv", "write_meter_csv", "parse_weather_csv",
    "impute_nearest", "discard_zero_mean", "align_covariates", "build_corpus",
    "write_corpus_archive", "read_corpus_archive",
]
