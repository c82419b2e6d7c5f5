"""Train/test splitting, stratified folds and grid search for the forest."""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import TooFewRows
from ..kinds import label_sort_key
from .forest import RandomForestClassifier
from .labels import LabeledMatrix

DEFAULT_GRID = {
    "n_trees": [100, 300],
    "max_depth": [None, 8, 16],
    "min_samples_leaf": [1, 3],
    "features_per_split": ["sqrt", "third"],
}
GRID_KEYS = tuple(DEFAULT_GRID)


def _rng(seed, stream):
    return np.random.default_rng(np.random.SeedSequence([int(seed), stream]))


def _classes(y):
    return sorted(set(str(v) for v in y), key=label_sort_key)


def _allocate(sizes, total):
    """Integer shares of ``total`` proportional to ``sizes`` (largest remainder).

    Remainder ties go to the earlier class.
    """
    sizes = np.asarray(sizes, dtype=float)
    exact = sizes * total / sizes.sum()
    base = np.floor(exact).astype(np.int64)
    extra = int(total - base.sum())
    order = sorted(range(len(sizes)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:extra]:
        base[i] += 1
    return base


def split_indices(y, seed: int = 0, stratified: bool = True, train_frac: float = 0.75):
    """Row positions ``(train, test)`` with ``round(train_frac * n)`` training rows.

    Stratified mode gives each class ``floor(train_frac * count)`` training
    rows and hands the remaining slots to the largest fractional parts, so
    every class proportion is preserved within one row.
    """
    y = np.asarray([str(v) for v in y], dtype=object)
    n = y.size
    if n < 4:
        raise TooFewRows(f"{n} rows, need at least 4 to split")
    n_train = int(math.floor(train_frac * n + 0.5))
    rng = _rng(seed, 0)
    if not stratified:
        perm = rng.permutation(n)
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])
    classes = _classes(y)
    members = [np.flatnonzero(y == c) for c in classes]
    share = _allocate([m.size for m in members], n_train)
    train = []
    for m, k in zip(members, share):
        train.append(rng.permutation(m)[:k])
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(n), train)
    return train, test


def split_75_25(m: LabeledMatrix, seed: int = 0, stratified: bool = True):
    """75 % / 25 % partition of a labeled matrix."""
    train, test = split_indices(m.y, seed, stratified)
    return m.take(train), m.take(test)


def stratified_folds(y, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """``k`` disjoint test folds covering every row.

    Each class is shuffled and dealt round-robin; the dealing position
    carries over from one class to the next, so fold sizes differ by at most
    one and every class count differs by at most one across folds.
    """
    y = np.asarray([str(v) for v in y], dtype=object)
    n = y.size
    if k < 2 or n < k:
        raise TooFewRows(f"{n} rows cannot form {k} folds")
    rng = _rng(seed, 1)
    folds = [[] for _ in range(k)]
    offset = 0
    for c in _classes(y):
        for j, row in enumerate(rng.permutation(np.flatnonzero(y == c))):
            folds[(offset + j) % k].append(row)
        offset = (offset + int(np.sum(y == c))) % k
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


def expand_grid(grid: dict) -> list[dict]:
    """Cartesian product in key order, last key varying fastest."""
    unknown = set(grid) - set(GRID_KEYS)
    if unknown:
        raise ValueError(f"unknown grid keys {sorted(unknown)}")
    keys = [k for k in GRID_KEYS if k in grid]
    return [dict(zip(keys, values)) for values in itertools.product(*(grid[k] for k in keys))]


@dataclass
class GridSearchResult:
    """Cross-validated accuracy per candidate and the refitted winner."""

    candidates: list
    fold_scores: list
    best_index: int
    k: int
    seed: int
    model: RandomForestClassifier = field(repr=False, default=None)

    @property
    def mean_scores(self) -> list[float]:
        return [float(np.mean(s)) for s in self.fold_scores]

    @property
    def best_params(self) -> dict:
        return dict(self.candidates[self.best_index])

    @property
    def best_score(self) -> float:
        return self.mean_scores[self.best_index]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "candidates": [
                {"params": c, "fold_accuracy": [float(v) for v in s], "mean_accuracy": float(np.mean(s))}
                for c, s in zip(self.candidates, self.fold_scores)
            ],
            "best_index": self.best_index,
            "best_params": self.best_params,
            "best_mean_accuracy": self.best_score,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def grid_search_cv(train: LabeledMatrix, grid: dict | None = None, k: int = 5, seed: int = 0,
                   n_jobs: int = 1) -> GridSearchResult:
    """Pick forest hyperparameters by stratified k-fold accuracy on ``train``.

    The first candidate (grid order) with the maximal mean accuracy wins and
    is refit on all of ``train``.  Only ``train`` is ever read.
    """
    X = train.X
    y = train.y
    folds = stratified_folds(y, k, seed)
    candidates = expand_grid(DEFAULT_GRID if grid is None else grid)
    if not candidates:
        raise ValueError("empty grid")
    all_rows = np.arange(len(y))
    scores = []
    for params in candidates:
        acc = []
        for test_rows in folds:
            fit_rows = np.setdiff1d(all_rows, test_rows)
            model = RandomForestClassifier(**params, random_state=seed, n_jobs=n_jobs)
            model.fit(X.iloc[fit_rows], y[fit_rows])
            acc.append(float(np.mean(model.predict(X.iloc[test_rows]) == y[test_rows])))
        scores.append(acc)
    means = [float(np.mean(s)) for s in scores]
    best = int(np.argmax(means))
    model = RandomForestClassifier(**candidates[best], random_state=seed, n_jobs=n_jobs).fit(X, y)
    return GridSearchResult(candidates, scores, best, k, seed, model)
