import json
import shutil

import numpy as np
import pandas as pd
import pytest

from forecastability.errors import ConfigError, StageFailed
from forecastability.features import extract
from forecastability.forecast import WindowConfig, backtest_day_ahead
from forecastability.ingest import STEPS_PER_WEEK, WEATHER_COLUMNS, LoadSeries, write_meter_csv
from forecastability.kinds import KIND_NAMES, ModelKind
from forecastability.pipeline import (KEYS, MissingArtifact, SynthSpec,
                                      default_config, describe_config, load_config, run_all,
                                      run_stages, stage_seed, strip_timing, synth_corpus,
                                      synth_series, validate_config)
from forecastability.pipeline.synth import apportion

SMALL = {
    "synth": {"n_buildings": 10},
    "gbm": {"n_trees": 20},
    "classifier": {"grid": {"n_trees": [10], "max_depth": [None, 4]}, "cv_folds": 3},
}


def small_cfg(out, **overrides):
    doc = {**SMALL, **overrides}
    return load_config(None, out=str(out), **doc)


def tree_bytes(root):
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "manifest.json"}


def statuses(manifest):
    return {r["name"]: r["status"] for r in manifest["stages"]}


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = small_cfg(out)
    manifest = run_all(cfg)
    return cfg, out, manifest


# -- configuration --------------------------------------------------------------

def test_defaults_cover_every_key():
    cfg = default_config()
    assert validate_config({}) == cfg
    text = describe_config()
    for key in KEYS:
        assert key in text
    assert cfg["window"]["target_lags"] == [48, 336]
    assert cfg["classifier"]["cv_folds"] == 5


@pytest.mark.parametrize("doc", [
    {"sed": 1},
    {"gbm": {"n_tree": 5}},
    {"classifier": {"grid": {"depth": [1]}}},
    {"seed": "zero"},
    {"seed": -1},
    {"gbm": {"n_trees": 2.5}},
    {"classifier": {"stratified": 1}},
    {"backtest": {"split_frac": 1.5}},
    {"family": "both"},
    {"window": {"target_lags": [24]}},
    {"input": {"meter_csv": "m.csv"}},
    {"synth": {"weeks": 4}},
    {"gbm": 3},
])
def test_invalid_config_raises(doc):
    with pytest.raises(ConfigError):
        validate_config(doc)


def test_load_config_file_and_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 4, "gbm": {"n_trees": 7}}))
    cfg = load_config(path, seed=9, out=None)
    assert cfg["seed"] == 9 and cfg["gbm"]["n_trees"] == 7 and cfg["gbm"]["max_leaves"] == 15
    assert cfg["out"] == "artifacts"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_stage_seeds_are_derived_and_distinct():
    cfg = default_config()
    assert stage_seed(cfg, "split") == stage_seed(default_config(), "split")
    assert stage_seed(cfg, "split") != stage_seed(cfg, "forest")
    assert stage_seed(cfg, "split") != stage_seed({**cfg, "seed": 1}, "split")


# -- synthetic corpus -----------------------------------------------------------

def test_apportion():
    assert apportion(120, (1, 1, 1)) == [40, 40, 40]
    assert apportion(10, (1, 1, 1)) == [4, 3, 3]
    assert sum(apportion(7, (0.2, 0.5, 0.3))) == 7


def test_synth_is_deterministic():
    a, ta = synth_corpus(SynthSpec(n_buildings=6, seed=3))
    b, tb = synth_corpus(SynthSpec(n_buildings=6, seed=3))
    assert ta == tb
    for bid in a:
        assert np.array_equal(a[bid][0].values, b[bid][0].values)
        assert np.array_equal(a[bid][1].weather(), b[bid][1].weather())
    c, _ = synth_corpus(SynthSpec(n_buildings=6, seed=4))
    assert not all(np.array_equal(a[b][0].values, c[b][0].values) for b in a)


def test_synth_shape_and_truth():
    series, weather, truth = synth_series(SynthSpec(n_buildings=9, weeks=8))
    assert len(series) == 9
    assert all(len(s) == 8 * STEPS_PER_WEEK for s in series)
    assert sorted(truth.values()) == ["linear"] * 3 + ["threshold"] * 3 + ["weekly"] * 3
    assert series[0].timestamps[0] == pd.Timestamp("2023-01-02T00:00:00Z")


def test_noiseless_weekly_archetype_is_periodic():
    corpus, truth = synth_corpus(SynthSpec(n_buildings=6, noise=0.0))
    weekly = [b for b, a in truth.items() if a == "weekly"]
    assert weekly
    for bid in weekly:
        series, frame = corpus[bid]
        r = backtest_day_ahead(series, frame, WindowConfig(), gbm_params={"n_trees": 5},
                               kinds=[ModelKind.DailyNaive, ModelKind.WeeklyNaive])
        assert r.scores[ModelKind.WeeklyNaive]["rmse"] == 0.0


def test_synth_spec_validation():
    with pytest.raises(ConfigError):
        SynthSpec(n_buildings=0)
    with pytest.raises(ConfigError):
        SynthSpec(weeks=7)
    with pytest.raises(ConfigError):
        SynthSpec(mix=(1, -1, 1))


# -- end-to-end on a small corpus -----------------------------------------------

def test_fresh_run_has_four_stage_records(small_run):
    _, out, manifest = small_run
    assert [r["name"] for r in manifest["stages"]] == ["forecast", "features", "label", "classify"]
    assert set(statuses(manifest).values()) == {"ran"}
    assert manifest["retained_buildings"] == 10
    assert json.loads((out / "manifest.json").read_text()) == manifest
    for rec in [manifest["corpus"], *manifest["stages"]]:
        for rel in rec["artifacts"]:
            assert (out / rel).is_file()


def test_forecast_stage_outputs(small_run):
    _, out, _ = small_run
    scores = pd.read_csv(out / "forecast" / "scores.csv")
    assert len(scores) == 40
    assert list(scores.columns) == ["building_id", "model", "rmse", "mae", "rmae"]
    assert (scores["rmse"] >= scores["mae"]).all()
    assert len(list((out / "forecast" / "reports").glob("*.json"))) == 10
    assert json.loads((out / "forecast" / "skipped.json").read_text()) == []


def test_feature_stage_outputs(small_run):
    cfg, out, _ = small_run
    mats = {s: pd.read_csv(out / "features" / f"{s}.csv", index_col=0, float_precision="round_trip")
            for s in ("informed", "agnostic", "combined")}
    assert mats["combined"].shape[1] == mats["informed"].shape[1] + mats["agnostic"].shape[1] == 31
    assert all(len(m) == 10 for m in mats.values())
    corpus, _ = synth_corpus(SynthSpec(n_buildings=10, seed=stage_seed(cfg, "synth")))
    bid = sorted(corpus)[3]
    series, frame = corpus[bid]
    row = extract(series, frame, "informed")
    repaired = {e["feature"] for e in
                json.loads((out / "features" / "informed.schema.json").read_text())["nan_repairs"]}
    for name in row.names:
        if name not in repaired:
            assert mats["informed"].loc[bid, name] == row[name], name


def test_label_stage_outputs(small_run):
    _, out, _ = small_run
    labs = {s: pd.read_csv(out / "labels" / f"{s}.csv", index_col=0)["label"]
            for s in ("informed", "agnostic", "combined")}
    assert labs["informed"].equals(labs["agnostic"]) and labs["agnostic"].equals(labs["combined"])
    counts = json.loads((out / "labels" / "label_counts.json").read_text())
    assert counts["total"] == 10
    for fam in counts["per_family"].values():
        assert list(fam) == list(KIND_NAMES) and sum(fam.values()) == 10
    # labels are the argmin of the score table
    scores = pd.read_csv(out / "forecast" / "scores.csv", float_precision="round_trip")
    for bid, grp in scores.groupby("building_id"):
        order = grp.assign(o=grp["model"].map(KIND_NAMES.index)).sort_values(["rmse", "o"])
        assert labs["combined"][bid] == order["model"].iloc[0]


def test_classify_stage_outputs(small_run):
    _, out, _ = small_run
    summary = json.loads((out / "classify" / "summary.json").read_text())
    assert list(summary) == ["informed", "agnostic", "combined"]
    for fam, s in summary.items():
        d = out / "classify" / fam
        for name in ("forest.json", "grid.json", "confusion.csv", "confusion.json",
                     "importances.csv", "split.json", "report.json"):
            assert (d / name).is_file()
        assert s["n_train"] + s["n_test"] == 10
        assert 0.0 <= s["accuracy"] <= 1.0
        assert len(s["top_features"]) == 5
        cm = json.loads((d / "confusion.json").read_text())
        assert np.sum(cm["counts"]) == s["n_test"]
        split = json.loads((d / "split.json").read_text())
        assert not set(split["train"]) & set(split["test"])


def test_second_run_is_cached_and_grid_change_reruns_classify(small_run, tmp_path):
    cfg, out, first = small_run
    copy = tmp_path / "copy"
    shutil.copytree(out, copy)
    again = run_all(small_cfg(copy))
    assert statuses(again) == dict.fromkeys(("forecast", "features", "label", "classify"), "cached")
    assert again["corpus"]["status"] == "cached"
    grid = {"grid": {"n_trees": [5], "max_depth": [None]}, "cv_folds": 3}
    changed = run_all(small_cfg(copy, classifier=grid))
    assert statuses(changed) == {"forecast": "cached", "features": "cached", "label": "cached",
                                 "classify": "ran"}
    assert json.loads((copy / "classify" / "informed" / "report.json").read_text())[
        "best_params"] == {"n_trees": 5, "max_depth": None}


def test_tampered_artifact_triggers_rerun(small_run, tmp_path):
    _, out, _ = small_run
    copy = tmp_path / "copy"
    shutil.copytree(out, copy)
    (copy / "labels" / "labels.csv").write_text("tampered\n")
    m = run_all(small_cfg(copy))
    assert statuses(m) == {"forecast": "cached", "features": "cached", "label": "ran",
                           "classify": "cached"}
    assert (copy / "labels" / "labels.csv").read_bytes() == (out / "labels" / "labels.csv").read_bytes()


def test_small_run_is_deterministic(small_run, tmp_path):
    cfg, out, first = small_run
    other = tmp_path / "other"
    second = run_all(small_cfg(other, jobs=2))
    assert tree_bytes(other) == tree_bytes(out)
    assert strip_timing(second) == strip_timing(first)


def test_stage_failure_preserves_prior_artifacts(small_run, tmp_path):
    _, out, _ = small_run
    copy = tmp_path / "copy"
    shutil.copytree(out, copy)
    before = tree_bytes(copy / "labels")
    with pytest.raises(StageFailed) as info:
        run_all(small_cfg(copy, classifier={"cv_folds": 50, "grid": {"n_trees": [5]}}))
    assert info.value.stage == "classify"
    assert tree_bytes(copy / "labels") == before
    manifest = json.loads((copy / "manifest.json").read_text())
    assert statuses(manifest)["classify"] == "failed"
    assert statuses(manifest)["label"] == "cached"
    assert "TooFewRows" in manifest["stages"][-1]["error"]


def test_missing_upstream_artifacts(tmp_path):
    with pytest.raises(MissingArtifact):
        run_stages(small_cfg(tmp_path), ["label"])


def test_single_family_classify(small_run, tmp_path):
    _, out, _ = small_run
    copy = tmp_path / "copy"
    shutil.copytree(out, copy)
    m = run_stages(small_cfg(copy, family="agnostic"), ["classify"])
    assert statuses(m)["classify"] == "ran"
    assert list(json.loads((copy / "classify" / "summary.json").read_text())) == ["agnostic"]
    assert not (copy / "classify" / "informed").exists()


# -- ingested corpus with short series ------------------------------------------

def write_inputs(tmp_path, lengths):
    """Meter and weather CSVs for synthetic buildings truncated to ``lengths``."""
    series, weather, _ = synth_series(SynthSpec(n_buildings=len(lengths), weeks=8, seed=5))
    cut = [LoadSeries(s.building_id, s.start, s.values[:n]) for s, n in zip(series, lengths)]
    meter = tmp_path / "meter.csv"
    write_meter_csv(cut, meter)
    wdf = pd.DataFrame({"timestamp": weather.timestamps.strftime("%Y-%m-%dT%H:%M:%SZ")})
    for col in WEATHER_COLUMNS:
        wdf[col] = [repr(float(v)) for v in getattr(weather, col)]
    wpath = tmp_path / "weather.csv"
    wdf.to_csv(wpath, index=False)
    return meter, wpath


def test_short_series_are_reported_as_skipped(tmp_path):
    full = 8 * STEPS_PER_WEEK
    meter, weather = write_inputs(tmp_path, [full, full, full, full, full, full, 460, 240])
    cfg = small_cfg(tmp_path / "out", input={"meter_csv": str(meter), "weather_csv": str(weather)},
                    classifier={"grid": {"n_trees": [5]}, "cv_folds": 2})
    run_all(cfg)
    out = tmp_path / "out"
    skipped_fc = {e["building_id"]: e["reason"] for e in
                  json.loads((out / "forecast" / "skipped.json").read_text())}
    skipped_ft = {e["building_id"] for e in
                  json.loads((out / "features" / "skipped.json").read_text())}
    assert set(skipped_fc) == {"b006", "b007"}
    assert all(r.startswith("InsufficientHistory") for r in skipped_fc.values())
    assert skipped_ft == {"b007"}
    assert len(pd.read_csv(out / "forecast" / "scores.csv")) == 6 * 4
    counts = json.loads((out / "labels" / "label_counts.json").read_text())
    assert counts["total"] == 6 and counts["unlabeled"] == ["b006"]
