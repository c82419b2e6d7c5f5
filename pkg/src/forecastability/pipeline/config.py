"""Pipeline configuration: one JSON document, every key defaulted.

Unknown keys are rejected so that a typo never silently falls back to a
default.  ``describe_config()`` renders the table of keys below.
"""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..forecast.windowing import WindowConfig
from ..selector.model_selection import DEFAULT_GRID, GRID_KEYS
from .synth import SynthSpec

FAMILY_CHOICES = ("informed", "agnostic", "combined", "all")

# (default, description) per dotted key
KEYS: dict[str, tuple] = {
    "seed": (0, "global seed; every stage seed is derived from it"),
    "out": ("artifacts", "output directory for all artifacts"),
    "jobs": (1, "worker processes for per-building work and tree growth"),
    "family": ("all", "feature families to label and classify: informed, agnostic, combined or all"),
    "input.meter_csv": (None, "long-format meter CSV; null selects the synthetic corpus"),
    "input.weather_csv": (None, "hourly weather CSV (required with meter_csv)"),
    "input.column_map": (None, "meter CSV column names {id, timestamp, kwh}; null for the defaults"),
    "input.timestamp_format": (None, "strftime format of meter timestamps; null for ISO 8601"),
    "synth.n_buildings": (120, "synthetic corpus size"),
    "synth.mix": ([1.0, 1.0, 1.0], "relative shares of the weekly, linear and threshold archetypes"),
    "synth.noise": (1.0, "noise multiplier; 0 gives noiseless archetypes"),
    "synth.weeks": (8, "series length in weeks (>= 8)"),
    "synth.start": ("2023-01-02T00:00:00Z", "first synthetic timestamp"),
    "window.horizon": (48, "forecast horizon in half-hour steps"),
    "window.target_lags": ([48, 336], "load lags used as regressors (each >= horizon)"),
    "window.covariate_lookback": (48, "lag of the lagged weather regressors"),
    "window.covariate_lookforward": (48, "weather steps assumed known ahead of the origin"),
    "backtest.split_frac": (0.8, "fraction of each series used for fitting"),
    "backtest.ridge_eps": (1e-8, "ridge stabiliser of the linear model (0 for plain least squares)"),
    "gbm.n_trees": (100, "boosting rounds"),
    "gbm.learning_rate": (0.1, "shrinkage per round"),
    "gbm.max_leaves": (15, "leaves per tree (leaf-wise growth)"),
    "gbm.min_samples_leaf": (20, "minimum rows per leaf"),
    "gbm.subsample": (1.0, "row fraction drawn per round without replacement"),
    "features.window": (48, "tile width of the stability and lumpiness features"),
    "classifier.grid": (copy.deepcopy(DEFAULT_GRID), "hyperparameter grid searched per family"),
    "classifier.cv_folds": (5, "stratified cross-validation folds"),
    "classifier.stratified": (True, "stratify the 75/25 split and the folds by label"),
    "classifier.top_k": (5, "number of importances listed in each report"),
}

_SECTIONS = sorted({k.split(".")[0] for k in KEYS if "." in k})


def default_config() -> dict:
    cfg: dict = {}
    for key, (default, _) in KEYS.items():
        _set(cfg, key, copy.deepcopy(default))
    return cfg


def describe_config() -> str:
    width = max(len(k) for k in KEYS)
    return "\n".join(f"{k:<{width}}  {json.dumps(v)}  {doc}" for k, (v, doc) in KEYS.items())


def _set(cfg, dotted, value):
    *head, last = dotted.split(".")
    for part in head:
        cfg = cfg.setdefault(part, {})
    cfg[last] = value


def _get(cfg, dotted):
    for part in dotted.split("."):
        cfg = cfg[part]
    return cfg


def _flatten(doc, prefix=""):
    for key, value in doc.items():
        dotted = f"{prefix}{key}"
        if key in _SECTIONS and not prefix:
            if not isinstance(value, dict):
                raise ConfigError(f"{dotted!r} must be an object")
            yield from _flatten(value, dotted + ".")
        else:
            yield dotted, value


def _check_type(key, value, default):
    if default is None or value is None:
        return
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"{key!r} must be {type(default).__name__}, got {value!r}")


def validate_config(doc: dict) -> dict:
    """Merge ``doc`` over the defaults; raise ConfigError on any problem."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    cfg = default_config()
    for key, value in _flatten(doc):
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        _check_type(key, value, KEYS[key][0])
        _set(cfg, key, value)
    _check_semantics(cfg)
    return cfg


def _check_semantics(cfg):
    if cfg["family"] not in FAMILY_CHOICES:
        raise ConfigError(f"family must be one of {FAMILY_CHOICES}")
    if not (isinstance(cfg["seed"], int) and cfg["seed"] >= 0):
        raise ConfigError("seed must be a non-negative integer")
    if cfg["jobs"] < 1:
        raise ConfigError("jobs must be >= 1")
    inp = cfg["input"]
    if (inp["meter_csv"] is None) != (inp["weather_csv"] is None):
        raise ConfigError("input.meter_csv and input.weather_csv must be given together")
    window_config(cfg)
    synth_spec(cfg)
    if not 0 < cfg["backtest"]["split_frac"] < 1:
        raise ConfigError("backtest.split_frac must be in (0, 1)")
    if cfg["backtest"]["ridge_eps"] < 0:
        raise ConfigError("backtest.ridge_eps must be >= 0")
    g = cfg["gbm"]
    if g["n_trees"] < 1 or g["max_leaves"] < 2 or g["min_samples_leaf"] < 1:
        raise ConfigError("gbm needs n_trees >= 1, max_leaves >= 2, min_samples_leaf >= 1")
    if not 0 < g["learning_rate"] <= 1 or not 0 < g["subsample"] <= 1:
        raise ConfigError("gbm.learning_rate and gbm.subsample must lie in (0, 1]")
    if cfg["features"]["window"] < 2:
        raise ConfigError("features.window must be >= 2")
    grid = cfg["classifier"]["grid"]
    for key, values in grid.items():
        if key not in GRID_KEYS:
            raise ConfigError(f"unknown classifier.grid key {key!r}")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"classifier.grid.{key} must be a non-empty list")
    if cfg["classifier"]["cv_folds"] < 2:
        raise ConfigError("classifier.cv_folds must be >= 2")


def window_config(cfg) -> WindowConfig:
    w = cfg["window"]
    return WindowConfig(horizon=w["horizon"], target_lags=tuple(w["target_lags"]),
                        covariate_lookback=w["covariate_lookback"],
                        covariate_lookforward=w["covariate_lookforward"])


def synth_spec(cfg) -> SynthSpec:
    s = cfg["synth"]
    return SynthSpec(n_buildings=s["n_buildings"], mix=tuple(s["mix"]), noise=s["noise"],
                     weeks=s["weeks"], start=s["start"], seed=stage_seed(cfg, "synth"))


def load_config(path=None, **overrides) -> dict:
    """Read a JSON config (or start from defaults) and apply top-level overrides."""
    doc = {}
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    doc = dict(doc)
    for key, value in overrides.items():
        if value is not None:
            doc[key] = value
    return validate_config(doc)


def stage_seed(cfg, name: str) -> int:
    """A 32-bit seed for ``name`` derived from the global seed."""
    tag = int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "little")
    return int(np.random.SeedSequence([int(cfg["seed"]), tag]).generate_state(1)[0])


def config_hash(cfg, keys) -> str:
    """sha256 over the listed top-level sections / dotted keys."""
    scoped = {k: _get(cfg, k) for k in keys}
    blob = json.dumps(scoped, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
