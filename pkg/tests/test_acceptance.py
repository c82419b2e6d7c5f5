"""Acceptance criteria, one test per criterion.

Every test prints a single ``PASS``/``FAIL`` line and the lines are repeated
in the terminal summary.  Time budgets exclude one-time numba compilation,
which is triggered by a warm-up call before each timer starts.

Run with ``pytest tests/test_acceptance.py -v``.  The optional large-scale
check runs only when ``FORECASTABILITY_LONDON_CONFIG`` names a pipeline
config whose ``input`` section points at the London half-hourly data.
"""
import json
import os
import time
from collections import Counter, defaultdict
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from forecastability.features import extract_domain_agnostic, extract_domain_informed
from forecastability.forecast import (GBMRegressor, SupervisedSet, backtest_day_ahead, fit_gbm,
                                      fit_linreg, forecast_daily_naive, forecast_weekly_naive)
from forecastability.ingest import STEPS_PER_DAY, STEPS_PER_WEEK
from forecastability.kinds import ModelKind
from forecastability.metrics import mae, rmse
from forecastability.pipeline import EXPECTED_WINNER, load_config, run_all, strip_timing
from forecastability.selector import fit_forest

from .conftest import ACCEPTANCE_LINES, make_pair

LONDON_ENV = "FORECASTABILITY_LONDON_CONFIG"


def record(name, ok, detail):
    line = f"[PRIMARY] {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def frame(X):
    X = np.asarray(X, dtype=float)
    return pd.DataFrame(X, columns=[f"x{j}" for j in range(X.shape[1])])


# -- component criteria ---------------------------------------------------------

def test_ols_oracle_equivalence():
    fit_linreg(SupervisedSet(frame([[1.0], [2.0], [3.0]]), np.array([1.0, 2.0, 2.0])))
    rng = np.random.default_rng(2024)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(50):
        p = int(rng.integers(1, 6))
        n = int(rng.integers(p + 5, 51))
        X = rng.normal(size=(n, p))
        y = X @ rng.normal(size=p) + rng.normal() + rng.normal(scale=0.5, size=n)
        beta = fit_linreg(SupervisedSet(frame(X), y), ridge_eps=0.0).beta_
        A = np.hstack([np.ones((n, 1)), X])
        oracle = np.linalg.solve(A.T @ A, A.T @ y)
        worst = max(worst, float(np.linalg.norm(beta - oracle) / np.linalg.norm(oracle)))
    elapsed = time.perf_counter() - t0
    record("OLS oracle equivalence", worst <= 1e-8 and elapsed < 1.0,
           f"max relative error {worst:.2e} (<= 1e-8) on 50 problems, {elapsed:.2f} s (< 1 s)")


def test_gbm_monotone_loss():
    GBMRegressor(n_trees=1, min_samples_leaf=1).fit(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    violations = 0
    for i in range(20):
        n, p = int(rng.integers(50, 300)), int(rng.integers(1, 6))
        X = rng.normal(size=(n, p))
        y = np.sin(2 * X[:, 0]) + X[:, -1] ** 2 + rng.normal(scale=0.3, size=n)
        m = GBMRegressor(n_trees=25, learning_rate=float(rng.uniform(0.05, 1.0)),
                         max_leaves=int(rng.integers(2, 16)),
                         min_samples_leaf=int(rng.integers(1, 10)), random_state=i).fit(X, y)
        violations += int(np.sum(np.diff(m.train_loss_) > 1e-12 * m.train_loss_[0]))
    single = fit_gbm(SupervisedSet(frame([[0.0], [1.0]]), np.array([0.0, 10.0])),
                     {"n_trees": 1, "learning_rate": 1.0, "max_leaves": 2, "min_samples_leaf": 1})
    exact = single.predict(frame([[0.0], [1.0]])).tolist() == [0.0, 10.0]
    elapsed = time.perf_counter() - t0
    record("GBM monotone loss", violations == 0 and exact and elapsed < 5.0,
           f"{violations} loss increases over 20 datasets, single-tree example exact={exact}, "
           f"{elapsed:.2f} s (< 5 s)")


def test_metric_identities():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    ok_pairs = 0
    for _ in range(1000):
        n = int(rng.integers(1, 80))
        y, y_hat = rng.normal(size=n) * 5, rng.normal(size=n) * 5
        ok_pairs += rmse(y, y_hat) >= mae(y, y_hat) - 1e-12
    hand = [
        abs(mae([1, 2, 3], [2, 2, 2]) - 2 / 3),
        abs(rmse([1, 2, 3], [2, 2, 2]) - np.sqrt(2 / 3)),
        abs(mae([0, 0], [3, 4]) - 3.5),
        abs(rmse([0, 0], [3, 4]) - np.sqrt(12.5)),
    ]
    elapsed = time.perf_counter() - t0
    record("Metric identities", ok_pairs == 1000 and max(hand) <= 1e-12 and elapsed < 1.0,
           f"rmse >= mae on {ok_pairs}/1000 pairs, max hand-example error {max(hand):.1e}, "
           f"{elapsed:.2f} s (< 1 s)")


def test_naive_exactness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    values = rng.normal(size=2000)
    slices_ok = all(
        np.array_equal(forecast_daily_naive(values, o), values[o - 48:o])
        and np.array_equal(forecast_weekly_naive(values, o), values[o - 336:o - 288])
        for o in range(336, 1952, 7))
    profile = rng.uniform(0.5, 2.0, STEPS_PER_WEEK)
    series, cov = make_pair(np.tile(profile, 6))
    r = backtest_day_ahead(series, cov, kinds=[ModelKind.DailyNaive, ModelKind.WeeklyNaive])
    weekly = r.scores[ModelKind.WeeklyNaive]["rmse"]
    elapsed = time.perf_counter() - t0
    record("Naive exactness", slices_ok and weekly == 0.0 and elapsed < 1.0,
           f"history slices equal={slices_ok}, weekly RMSE on 336-periodic series {weekly}, "
           f"{elapsed:.2f} s (< 1 s)")


def test_feature_golden_values():
    t0 = time.perf_counter()
    got = {
        "sparsity": extract_domain_agnostic(np.array([0.0, 1, 0, 3]), window=2)["sparsity"],
        "stability": extract_domain_agnostic(np.array([1.0, 1, 1, 1, 3, 3, 3, 3]), window=4)["stability"],
        "lumpiness": extract_domain_agnostic(np.array([1.0, 1, 1, 1, 3, 3, 3, 3]), window=4)["lumpiness"],
        "acf_lag1": extract_domain_agnostic(np.array([1.0, -1] * 4), window=4)["acf_lag1"],
        "skewness": extract_domain_agnostic(np.full(200, 2.0))["skewness"],
    }
    flat = extract_domain_informed(*make_pair(np.full(2 * STEPS_PER_WEEK, 1.3)))
    got["load_factor"] = flat["load_factor"]
    got["evening_share"] = flat["evening_share"]
    want = {"sparsity": 0.5, "stability": 1.0, "lumpiness": 0.0, "acf_lag1": -0.875,
            "skewness": 0.0, "load_factor": 1.0, "evening_share": 4 / 24}
    err = {k: abs(got[k] - want[k]) for k in want}
    elapsed = time.perf_counter() - t0
    record("Feature golden values", max(err.values()) <= 1e-9 and elapsed < 1.0,
           ", ".join(f"{k}={got[k]:.4f}" for k in want) + f"; {elapsed:.2f} s (< 1 s)")


def test_rf_correctness():
    fit_forest(frame([[0.0], [1.0]]), ["A", "B"], {"n_trees": 1})
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    X = rng.normal(size=(150, 4))
    y = np.where(X[:, 0] + rng.normal(scale=0.5, size=150) > 0, "GBM",
                 np.where(X[:, 1] > 0, "LinReg", "WeeklyNaive"))
    model = fit_forest(frame(X), y, {"n_trees": 25}, seed=1)
    rows = frame(rng.normal(size=(100, 4)))
    votes = model.votes(rows)
    brute = np.zeros_like(votes)
    for tree in model.trees_:
        for i, code in enumerate(tree.predict_codes(rows.to_numpy())):
            brute[i, code] += 1
    tally_ok = np.array_equal(votes, brute)
    sums = []
    for seed in range(20):
        Xs = rng.normal(size=(80, 3))
        ys = np.where(Xs[:, seed % 3] > 0, "A", "B")
        sums.append(abs(fit_forest(frame(Xs), ys, {"n_trees": 10}, seed=seed)
                        .feature_importances_.sum() - 1.0))

    def separable(n):
        pts = []
        while len(pts) < n:
            x = rng.uniform(-4, 4, size=2)
            if abs(x.sum()) / np.sqrt(2) >= 1:
                pts.append(x)
        pts = np.asarray(pts)
        return frame(pts), np.where(pts.sum(axis=1) > 0, "GBM", "LinReg")

    Xa, ya = separable(200)
    Xb, yb = separable(200)
    acc = float(np.mean(fit_forest(Xa, ya, {"n_trees": 50}, seed=0).predict(Xb) == yb))
    elapsed = time.perf_counter() - t0
    record("RF correctness", tally_ok and max(sums) <= 1e-9 and acc >= 0.95 and elapsed < 10.0,
           f"vote tally equals brute force={tally_ok}, max |sum(importances) - 1| {max(sums):.1e}, "
           f"separable held-out accuracy {acc:.3f} (>= 0.95), {elapsed:.2f} s (< 10 s)")


# -- end-to-end criteria ----------------------------------------------------------

@pytest.fixture(scope="module")
def archetype_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance") / "run1"
    cfg = load_config(None, out=str(out), seed=0)
    t0 = time.perf_counter()
    manifest = run_all(cfg)
    return cfg, out, manifest, time.perf_counter() - t0


@pytest.mark.slow
def test_end_to_end_archetype_run(archetype_run):
    cfg, out, manifest, elapsed = archetype_run
    truth = json.loads((out / "corpus" / "truth.json").read_text())
    labels = pd.read_csv(out / "labels" / "labels.csv", dtype=str).set_index("building_id")["label"]
    hits, sizes = Counter(), Counter(truth.values())
    for bid, archetype in truth.items():
        hits[archetype] += labels.get(bid) == str(EXPECTED_WINNER[archetype])
    rates = {a: hits[a] / sizes[a] for a in sizes}
    summary = json.loads((out / "classify" / "summary.json").read_text())
    margins = {f: s["accuracy"] - s["majority_baseline"] for f, s in summary.items()}
    acc = {f: s["accuracy"] for f, s in summary.items()}
    ok_a = len(truth) == 120 and all(r >= 0.80 for r in rates.values())
    ok_b = set(margins) == {"informed", "agnostic", "combined"} and \
        all(m >= 0.10 - 1e-12 for m in margins.values())
    ok_c = acc["combined"] >= max(acc["informed"], acc["agnostic"]) - 0.02 - 1e-12
    ok_t = elapsed <= 300
    detail = (
        "(a) label agreement " + ", ".join(f"{a} {rates[a]:.3f}" for a in sorted(rates))
        + " (>= 0.80); (b) accuracy - majority baseline "
        + ", ".join(f"{f} {acc[f]:.3f}-{summary[f]['majority_baseline']:.3f}" for f in acc)
        + " (>= 0.10); (c) combined " + f"{acc['combined']:.3f} >= max single - 0.02; "
        + f"runtime {elapsed:.0f} s (<= 300 s)")
    record("End-to-end archetype run", ok_a and ok_b and ok_c and ok_t, detail)


@pytest.mark.slow
def test_determinism(archetype_run):
    cfg, out, manifest, first_elapsed = archetype_run
    out2 = out.parent / "run2"
    t0 = time.perf_counter()
    manifest2 = run_all(load_config(None, out=str(out2), seed=0))
    second_elapsed = time.perf_counter() - t0

    def files(root):
        return {str(p.relative_to(root)): p.read_bytes()
                for p in sorted(root.rglob("*")) if p.is_file() and p.name != "manifest.json"}

    a, b = files(out), files(out2)
    differing = sorted(k for k in set(a) | set(b) if a.get(k) != b.get(k))
    same_manifest = strip_timing(manifest) == strip_timing(manifest2)
    ok_t = second_elapsed <= 2 * first_elapsed
    record("Determinism", not differing and same_manifest and ok_t,
           f"{len(a)} artifacts, {len(differing)} differ {differing[:3]}, manifests equal without "
           f"timestamps={same_manifest}, second run {second_elapsed:.0f} s vs first "
           f"{first_elapsed:.0f} s (<= 2x)")


@pytest.mark.slow
@pytest.mark.skipif(not os.environ.get(LONDON_ENV), reason=f"{LONDON_ENV} not set")
def test_large_scale_london(tmp_path):
    cfg = load_config(Path(os.environ[LONDON_ENV]), out=str(tmp_path / "london"))
    run_all(cfg)
    out = Path(cfg["out"])
    counts = json.loads((out / "labels" / "label_counts.json").read_text())["counts"]
    total = sum(counts.values())
    regression = (counts["LinReg"] + counts["GBM"]) / total
    summary = json.loads((out / "classify" / "summary.json").read_text())
    combined = summary.get("combined", {}).get("accuracy", float("nan"))
    record("Large-scale sanity", regression >= 0.90 and combined >= 0.60,
           f"LinReg+GBM win {regression:.3f} of {total} buildings (>= 0.90), "
           f"combined accuracy {combined:.3f} (>= 0.60)")
