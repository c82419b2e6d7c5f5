"""Pipeline stages, their on-disk artifacts and content-hash caching.

Layout under the output directory::

    corpus/            cleaned corpus archive (+ truth.json for synthetic runs)
    forecast/          reports/*.json, scores.csv, skipped.json
    features/          {informed,agnostic,combined}.csv + .schema.json, skipped.json
    labels/            {informed,agnostic,combined}.csv, labels.csv, label_counts.json
    classify/<family>/ forest.json, grid.json, confusion.{csv,json}, report.json,
                       importances.csv, split.json
    classify/summary.json
    manifest.json      written last

The corpus step prepares inputs; the four stages after it are forecast,
features, label and classify.  Each stage record stores a key hashed from
the config keys the stage reads and the content digests of its inputs; a
stage whose key is unchanged and whose artifacts still match their hashes
is reported as cached and not rerun.
"""
from __future__ import annotations

import hashlib
import json
import shutil
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pandas as pd

from .. import __version__
from .._parallel import parallel_map
from ..errors import ConfigError, DataError, StageFailed
from ..features import (AGNOSTIC, COMBINED, INFORMED, extract_domain_agnostic,
                        extract_domain_informed, matrix_from_raw, schema)
from ..features.registry import PREFIX
from ..forecast import ForecastReport, backtest_day_ahead
from ..ingest import (_atomic_write, build_corpus, parse_meter_csv, parse_weather_csv,
                      read_corpus_archive, write_corpus_archive)
from ..kinds import KIND_NAMES, ModelKind
from ..metrics import confusion, report
from ..selector import (LabeledMatrix, grid_search_cv, make_labels, split_indices,
                        top_k_importances)
from .config import config_hash, stage_seed, synth_spec, window_config
from .synth import synth_corpus

STAGES = ("forecast", "features", "label", "classify")
FAMILY_FILES = {"informed": INFORMED, "agnostic": AGNOSTIC, "combined": COMBINED}

# config keys read by each step (``out`` and ``jobs`` never change results)
SCOPE = {
    "corpus": ("seed", "input", "synth"),
    "forecast": ("seed", "window", "backtest", "gbm"),
    "features": ("features",),
    "label": (),
    "classify": ("seed", "family", "classifier"),
}
UPSTREAM = {
    "corpus": (),
    "forecast": ("corpus",),
    "features": ("corpus",),
    "label": ("forecast", "features"),
    "classify": ("label",),
}
STAGE_DIRS = {"corpus": "corpus", "forecast": "forecast", "features": "features",
              "label": "labels", "classify": "classify"}
TIMING_KEYS = ("started_at", "finished_at", "elapsed_seconds")


class MissingArtifact(DataError):
    """An upstream stage has not produced (valid) artifacts yet."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _safe_stem(bid: str, i: int) -> str:
    keep = "".join(c if c.isalnum() or c in "_.-" else "_" for c in bid)[:64] or "building"
    return f"{i:05d}_{keep}"


def selected_families(cfg) -> list[str]:
    fam = cfg["family"]
    return list(FAMILY_FILES) if fam == "all" else [fam]


class Workspace:
    """Artifact directory plus the manifest that indexes it."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.root = Path(cfg["out"])
        self.manifest_path = self.root / "manifest.json"

    def path(self, rel) -> Path:
        return self.root / rel

    def write(self, rel, text) -> str:
        p = self.path(rel)
        p.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(p, text)
        return rel

    def load_manifest(self) -> dict:
        if self.manifest_path.exists():
            try:
                return json.loads(self.manifest_path.read_text(encoding="utf-8"))
            except json.JSONDecodeError:
                return {}
        return {}

    def valid(self, record) -> bool:
        """Every recorded artifact exists with its recorded hash."""
        if not record or record.get("status") == "failed":
            return False
        for rel, digest in record.get("artifacts", {}).items():
            p = self.path(rel)
            if not p.is_file() or _sha256(p) != digest:
                return False
        return True


def _digest(record) -> str:
    blob = json.dumps(record["artifacts"], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


# --------------------------------------------------------------------------
# corpus preparation
# --------------------------------------------------------------------------

def prepare_corpus(ws: Workspace) -> list[str]:
    """Ingest CSVs or synthesise; writes the cleaned-corpus archive."""
    cfg = ws.cfg
    inp = cfg["input"]
    written = []
    if inp["meter_csv"] is not None:
        series = parse_meter_csv(Path(inp["meter_csv"]), inp["column_map"], inp["timestamp_format"])
        weather = parse_weather_csv(Path(inp["weather_csv"]))
        corpus, dropped = build_corpus(series, weather)
        truth = None
    else:
        corpus, truth = synth_corpus(synth_spec(cfg))
        dropped = []
    if not corpus:
        raise DataError("no building survives cleaning")
    directory = ws.path("corpus")
    write_corpus_archive(corpus, directory, dropped)
    written += [f"corpus/{p.name}" for p in sorted(directory.iterdir())
                if p.suffix == ".csv" or p.name == "manifest.json"]
    if truth is not None:
        written.append(ws.write("corpus/truth.json", _dump(dict(sorted(truth.items())))))
    return written


def load_corpus(ws: Workspace):
    return read_corpus_archive(ws.path("corpus"))


# --------------------------------------------------------------------------
# stage 1: forecast
# --------------------------------------------------------------------------

def _backtest_job(job):
    series, frame, wcfg, split_frac, gbm_params, ridge_eps = job
    try:
        rep = backtest_day_ahead(series, frame, wcfg, split_frac=split_frac,
                                 gbm_params=gbm_params, ridge_eps=ridge_eps)
        return rep.to_dict(), None
    except DataError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def gbm_params(cfg) -> dict:
    g = cfg["gbm"]
    return {"n_trees": g["n_trees"], "learning_rate": g["learning_rate"],
            "max_leaves": g["max_leaves"], "min_samples_leaf": g["min_samples_leaf"],
            "subsample": g["subsample"], "random_state": stage_seed(cfg, "gbm")}


def stage_forecast(ws: Workspace) -> list[str]:
    """Backtest the four forecasters on every building."""
    cfg = ws.cfg
    corpus, _ = load_corpus(ws)
    ids = sorted(corpus)
    wcfg = window_config(cfg)
    bt = cfg["backtest"]
    jobs = [(corpus[b][0], corpus[b][1], wcfg, bt["split_frac"], gbm_params(cfg), bt["ridge_eps"])
            for b in ids]
    results = parallel_map(_backtest_job, jobs, cfg["jobs"])
    written, rows, skipped = [], [], []
    for i, (bid, (rep, err)) in enumerate(zip(ids, results)):
        if rep is None:
            skipped.append({"building_id": bid, "reason": err})
            continue
        written.append(ws.write(f"forecast/reports/{_safe_stem(bid, i)}.json",
                                json.dumps(rep, indent=1, allow_nan=False) + "\n"))
        rows.extend(ForecastReport.from_dict(rep).score_rows())
    if not rows:
        raise DataError("every building was skipped by the backtest")
    scores = pd.DataFrame(rows, columns=["building_id", "model", "rmse", "mae", "rmae"])
    written.append(ws.write("forecast/scores.csv", scores.to_csv(index=False)))
    written.append(ws.write("forecast/skipped.json", _dump(skipped)))
    return written


def read_scores(ws: Workspace) -> dict:
    """``building_id -> {ModelKind: rmse}`` from ``forecast/scores.csv``."""
    df = pd.read_csv(ws.path("forecast/scores.csv"), dtype={"building_id": str, "model": str},
                     float_precision="round_trip")
    out: dict = {}
    for bid, model, value in zip(df["building_id"], df["model"], df["rmse"]):
        out.setdefault(bid, {})[ModelKind.parse(model)] = float(value)
    return out


# --------------------------------------------------------------------------
# stage 2: features
# --------------------------------------------------------------------------

def _feature_job(job):
    values, frame, window = job
    try:
        inf = extract_domain_informed(values, frame).to_array()
        agn = extract_domain_agnostic(values, window).to_array()
        return inf, agn, None
    except DataError as exc:
        return None, None, f"{type(exc).__name__}: {exc}"


def stage_features(ws: Workspace) -> list[str]:
    """Informed, agnostic and combined matrices with schema sidecars."""
    cfg = ws.cfg
    corpus, _ = load_corpus(ws)
    ids = sorted(corpus)
    jobs = [(corpus[b][0].values, corpus[b][1], cfg["features"]["window"]) for b in ids]
    results = parallel_map(_feature_job, jobs, cfg["jobs"])
    kept = [b for b, r in zip(ids, results) if r[2] is None]
    skipped = [{"building_id": b, "reason": r[2]} for b, r in zip(ids, results) if r[2] is not None]
    if not kept:
        raise DataError("no building has enough data for feature extraction")
    index = pd.Index(kept, name="building_id")
    inf_names = [s.name for s in schema(INFORMED)]
    agn_names = [s.name for s in schema(AGNOSTIC)]
    raw = {
        INFORMED: pd.DataFrame([r[0] for r in results if r[2] is None], index=index, columns=inf_names),
        AGNOSTIC: pd.DataFrame([r[1] for r in results if r[2] is None], index=index, columns=agn_names),
    }
    raw[COMBINED] = pd.concat(
        [raw[INFORMED].add_prefix(PREFIX[INFORMED]), raw[AGNOSTIC].add_prefix(PREFIX[AGNOSTIC])], axis=1)
    written = []
    for slug, family in FAMILY_FILES.items():
        fm = matrix_from_raw(raw[family], family)
        written.append(ws.write(f"features/{slug}.csv", fm.to_csv()))
        written.append(ws.write(f"features/{slug}.schema.json", fm.schema_json() + "\n"))
    written.append(ws.write("features/skipped.json", _dump(skipped)))
    return written


def read_features(ws: Workspace, slug: str) -> pd.DataFrame:
    df = pd.read_csv(ws.path(f"features/{slug}.csv"), dtype={"building_id": str},
                     float_precision="round_trip")
    return df.set_index("building_id")


# --------------------------------------------------------------------------
# stage 3: label
# --------------------------------------------------------------------------

def stage_label(ws: Workspace) -> list[str]:
    """Attach the lowest-RMSE forecaster to every featurised building."""
    labels = make_labels(read_scores(ws))
    written = []
    counts = {}
    unlabeled = []
    for slug in FAMILY_FILES:
        feats = read_features(ws, slug)
        unlabeled = [b for b in feats.index if b not in labels]
        feats = feats.loc[[b for b in feats.index if b in labels]]
        lm = LabeledMatrix.from_matrix(feats, labels)
        written.append(ws.write(f"labels/{slug}.csv", lm.to_csv()))
        counts[slug] = lm.counts()
    ids = sorted(b for b in labels if b in set(read_features(ws, "combined").index))
    table = pd.DataFrame({"building_id": ids, "label": [str(labels[b]) for b in ids]})
    written.append(ws.write("labels/labels.csv", table.to_csv(index=False)))
    summary = {
        "counts": counts["combined"],
        "total": int(sum(counts["combined"].values())),
        "per_family": counts,
        "unlabeled": unlabeled,
    }
    written.append(ws.write("labels/label_counts.json", _dump(summary)))
    return written


# --------------------------------------------------------------------------
# stage 4: classify
# --------------------------------------------------------------------------

def majority_baseline(train_y, test_y) -> tuple[str, float]:
    """Accuracy of always predicting the most frequent training label
    (ties to ModelKind order)."""
    kinds = [k for k in KIND_NAMES]
    counts = [int(np.sum(np.asarray(train_y) == k)) for k in kinds]
    label = kinds[int(np.argmax(counts))]
    return label, float(np.mean(np.asarray(test_y) == label))


def classify_family(ws: Workspace, slug: str) -> tuple[list[str], dict]:
    cfg = ws.cfg
    ccfg = cfg["classifier"]
    lm = LabeledMatrix.read_csv(ws.path(f"labels/{slug}.csv"))
    train_pos, test_pos = split_indices(lm.y, stage_seed(cfg, "split"), ccfg["stratified"])
    train, test = lm.take(train_pos), lm.take(test_pos)
    gs = grid_search_cv(train, ccfg["grid"], ccfg["cv_folds"], stage_seed(cfg, "forest"), cfg["jobs"])
    model = gs.model
    pred = model.predict(test.X)
    cm = confusion(test.y, pred, list(KIND_NAMES))
    rep = report(cm)
    base_label, base_acc = majority_baseline(train.y, test.y)
    top = top_k_importances(model, ccfg["top_k"])
    ranked = top_k_importances(model, len(model.feature_names))
    imp = pd.DataFrame({"rank": np.arange(1, len(ranked) + 1), "feature": [f for f, _ in ranked],
                        "importance": [w for _, w in ranked]})
    d = f"classify/{slug}"
    written = [
        ws.write(f"{d}/forest.json", model.to_json() + "\n"),
        ws.write(f"{d}/grid.json", gs.to_json() + "\n"),
        ws.write(f"{d}/confusion.csv", cm.to_csv()),
        ws.write(f"{d}/confusion.json", cm.to_json() + "\n"),
        ws.write(f"{d}/importances.csv", imp.to_csv(index=False)),
        ws.write(f"{d}/split.json", _dump({"train": list(train.features.index),
                                           "test": list(test.features.index)})),
    ]
    summary = {
        "accuracy": rep.accuracy,
        "macro_f1": rep.macro_f1,
        "weighted_f1": rep.weighted_f1,
        "majority_label": base_label,
        "majority_baseline": base_acc,
        "n_train": len(train),
        "n_test": len(test),
        "best_params": gs.best_params,
        "cv_accuracy": gs.best_score,
        "top_features": [{"feature": f, "importance": w} for f, w in top],
    }
    written.append(ws.write(f"{d}/report.json", _dump({**rep.to_dict(), **summary})))
    return written, summary


def stage_classify(ws: Workspace) -> list[str]:
    """Split, grid-search, fit and evaluate one forest per selected family."""
    written, summary = [], {}
    for slug in selected_families(ws.cfg):
        files, summary[slug] = classify_family(ws, slug)
        written += files
    written.append(ws.write("classify/summary.json", _dump(summary)))
    return written


STAGE_FUNCS = {
    "corpus": prepare_corpus,
    "forecast": stage_forecast,
    "features": stage_features,
    "label": stage_label,
    "classify": stage_classify,
}


# --------------------------------------------------------------------------
# orchestration
# --------------------------------------------------------------------------

def _stage_key(cfg, name, records) -> str:
    parts = [config_hash(cfg, SCOPE[name])]
    for up in UPSTREAM[name]:
        parts.append(_digest(records[up]))
    return hashlib.sha256("|".join([name, *parts]).encode()).hexdigest()


def _manifest_config(cfg) -> dict:
    return {k: v for k, v in cfg.items() if k not in ("out", "jobs")}


def run_stages(cfg, names=("corpus", *STAGES), force: bool = False) -> dict:
    """Run (or reuse) the named steps in pipeline order; returns the manifest.

    Steps not named must already have valid artifacts from an earlier run,
    otherwise :class:`MissingArtifact` is raised before anything runs.
    Any exception inside a step is re-raised as :class:`StageFailed` after
    the manifest has been updated; artifacts of earlier steps stay intact.
    """
    ws = Workspace(cfg)
    ws.root.mkdir(parents=True, exist_ok=True)
    previous = ws.load_manifest()
    old = {r["name"]: r for r in previous.get("stages", [])}
    if "corpus" in previous:
        old["corpus"] = previous["corpus"]
    order = ("corpus", *STAGES)
    names = [n for n in order if n in set(names)]
    records = {}
    ancestors = _ancestors(names)
    for name in order:
        if name in names:
            continue
        if name in ancestors:
            if not ws.valid(old.get(name)):
                raise MissingArtifact(f"{name!r} artifacts are missing or stale; run that step first")
            records[name] = old[name]
        elif name in old:
            records[name] = old[name]

    failure = None
    for name in names:
        key = _stage_key(cfg, name, records)
        prior = old.get(name)
        if not force and prior and prior.get("key") == key and ws.valid(prior):
            records[name] = {**prior, "status": "cached"}
            continue
        started = time.perf_counter()
        start_stamp = _now()
        try:
            shutil.rmtree(ws.path(STAGE_DIRS[name]), ignore_errors=True)
            files = STAGE_FUNCS[name](ws)
        except ConfigError:
            raise
        except Exception as exc:  # noqa: BLE001  (any stage error becomes StageFailed)
            records[name] = {"name": name, "status": "failed", "key": key, "artifacts": {},
                             "error": f"{type(exc).__name__}: {exc}", "started_at": start_stamp,
                             "finished_at": _now(),
                             "elapsed_seconds": round(time.perf_counter() - started, 3)}
            failure = StageFailed(name, exc)
            failure.__cause__ = exc
            break
        records[name] = {
            "name": name,
            "status": "ran",
            "key": key,
            "artifacts": {rel: _sha256(ws.path(rel)) for rel in sorted(set(files))},
            "started_at": start_stamp,
            "finished_at": _now(),
            "elapsed_seconds": round(time.perf_counter() - started, 3),
        }
        # a rerun step invalidates cached downstream records
        for later in order[order.index(name) + 1:]:
            if later not in names:
                records.pop(later, None)

    manifest = _build_manifest(ws, records)
    ws.write("manifest.json", _dump(manifest))
    if failure is not None:
        raise failure
    return manifest


def _ancestors(names):
    seen, todo = set(), list(names)
    while todo:
        n = todo.pop()
        for up in UPSTREAM[n]:
            if up not in seen:
                seen.add(up)
                todo.append(up)
    return seen


def _build_manifest(ws: Workspace, records: dict) -> dict:
    cfg = ws.cfg
    manifest = {
        "tool": "forecastability",
        "version": __version__,
        "config_hash": config_hash(cfg, [k for k in cfg if k not in ("out", "jobs")]),
        "config": _manifest_config(cfg),
    }
    if "corpus" in records:
        manifest["corpus"] = records["corpus"]
        try:
            archive = json.loads(ws.path("corpus/manifest.json").read_text())["buildings"]
            manifest["retained_buildings"] = sum(not e["discarded"] for e in archive)
            manifest["discarded_buildings"] = [e["building_id"] for e in archive if e["discarded"]]
        except (OSError, KeyError, json.JSONDecodeError):
            pass
    manifest["stages"] = [records[n] for n in STAGES if n in records]
    return manifest


def run_all(cfg, force: bool = False) -> dict:
    """Corpus preparation followed by the four stages, reusing cached ones."""
    return run_stages(cfg, ("corpus", *STAGES), force=force)


def strip_timing(manifest: dict) -> dict:
    """Copy of a manifest without wall-clock fields (for comparisons)."""
    def clean(rec):
        return {k: v for k, v in rec.items() if k not in TIMING_KEYS}
    out = {k: v for k, v in manifest.items() if k not in ("corpus", "stages")}
    if "corpus" in manifest:
        out["corpus"] = clean(manifest["corpus"])
    out["stages"] = [clean(r) for r in manifest.get("stages", [])]
    return out


__all__ = [
    "STAGES", "MissingArtifact", "Workspace", "prepare_corpus", "stage_forecast", "stage_features",
    "stage_label", "stage_classify", "run_stages", "run_all", "strip_timing", "majority_baseline",
    "read_scores", "read_features",
]
