"""Random forest classifier: bagged Gini trees with majority voting."""
from __future__ import annotations

import json

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .._parallel import parallel_map
from .._validation import check_fitted, check_matrix, check_schema, remember_schema
from ..kinds import label_sort_key
from .tree import ClassificationTree, fit_tree

FOREST_FORMAT = "forecastability.forest"
FOREST_VERSION = 1


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    """Randomness of one tree depends only on ``(seed, tree_index)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(tree_index)]))


def _grow_member(job):
    X, codes, n_classes, params, seed, i = job
    rng = tree_rng(seed, i)
    n = X.shape[0]
    boot = rng.integers(0, n, size=n)
    split_seed = int(rng.integers(0, 2**31 - 1))
    return fit_tree(X[boot], codes[boot], n_classes, seed=split_seed, **params)


class RandomForestClassifier(ClassifierMixin, BaseEstimator):
    """Bootstrap-aggregated classification trees.

    Each tree is trained on ``n`` rows drawn with replacement and considers a
    random subset of ``features_per_split`` features at every split.  The
    forest predicts the class with the most tree votes; vote ties go to the
    class that comes first in ``classes_`` (ModelKind order for forecaster
    labels, lexical otherwise).

    Parameters
    ----------
    n_trees : int, default=100
    max_depth : int or None, default=None
    min_samples_leaf : int, default=1
    features_per_split : {"sqrt", "third"}, int or None, default="sqrt"
        ``"sqrt"`` is ceil(sqrt(p)), ``"third"`` is max(1, p // 3), ``None`` all.
    random_state : int, default=0
    n_jobs : int, default=1
        Worker processes used to grow trees; results do not depend on it.

    Attributes
    ----------
    classes_ : ndarray of labels
    trees_ : list of ClassificationTree
    feature_importances_ : ndarray
        Mean decrease in Gini impurity, size weighted, summed over the forest
        and normalised to 1 (all zeros when no tree split).
    """

    def __init__(self, n_trees=100, max_depth=None, min_samples_leaf=1,
                 features_per_split="sqrt", random_state=0, n_jobs=1):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.features_per_split = features_per_split
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X, names = check_matrix(X)
        y = np.asarray([str(v) for v in np.asarray(y, dtype=object).ravel()], dtype=object)
        if X.shape[0] == 0:
            raise ValueError("cannot fit a forest on zero rows")
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        self.classes_ = np.asarray(sorted(set(y), key=label_sort_key), dtype=object)
        code_of = {c: i for i, c in enumerate(self.classes_)}
        codes = np.asarray([code_of[v] for v in y], dtype=np.int64)
        params = {"max_depth": self.max_depth, "min_samples_leaf": self.min_samples_leaf,
                  "features_per_split": self.features_per_split}
        jobs = [(X, codes, len(self.classes_), params, self.random_state, i)
                for i in range(self.n_trees)]
        self.trees_ = parallel_map(_grow_member, jobs, self.n_jobs)
        remember_schema(self, names, X.shape[1])
        self._set_importances()
        return self

    def _set_importances(self):
        raw = np.zeros(self.n_features_in_)
        for tree in self.trees_:
            raw += tree.importances(self.n_features_in_)
        total = raw.sum()
        self.feature_importances_ = raw / total if total > 0 else raw

    def votes(self, X) -> np.ndarray:
        """``(n_rows, n_classes)`` count of trees voting for each class."""
        X = check_schema(self, X)
        out = np.zeros((X.shape[0], len(self.classes_)), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for tree in self.trees_:
            np.add.at(out, (rows, tree.predict_codes(X)), 1)
        return out

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.votes(X), axis=1)]

    def predict_proba(self, X) -> np.ndarray:
        """Vote fractions per class."""
        return self.votes(X) / len(self.trees_)

    @property
    def feature_names(self) -> list[str]:
        names = getattr(self, "feature_names_in_", None)
        if names is None:
            return [f"x{i}" for i in range(self.n_features_in_)]
        return [str(n) for n in names]

    # -- persistence --------------------------------------------------------

    def to_dict(self) -> dict:
        check_fitted(self, "trees_")
        return {
            "format": FOREST_FORMAT,
            "version": FOREST_VERSION,
            # n_jobs is a runtime choice that never changes the model
            "params": {k: v for k, v in self.get_params().items() if k != "n_jobs"},
            "classes": [str(c) for c in self.classes_],
            "feature_names": self.feature_names,
            "importances": self.feature_importances_.tolist(),
            "trees": [t.to_record(self.feature_names, self.classes_) for t in self.trees_],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d) -> "RandomForestClassifier":
        if d.get("format") != FOREST_FORMAT or d.get("version") != FOREST_VERSION:
            raise ValueError("not a version-1 forest document")
        model = cls(**d["params"])
        model.classes_ = np.asarray(d["classes"], dtype=object)
        model.trees_ = [ClassificationTree.from_record(r) for r in d["trees"]]
        model.n_features_in_ = len(d["feature_names"])
        model.feature_names_in_ = np.asarray(d["feature_names"], dtype=object)
        model.feature_importances_ = np.asarray(d["importances"], dtype=float)
        return model

    @classmethod
    def from_json(cls, text) -> "RandomForestClassifier":
        return cls.from_dict(json.loads(text))


def fit_forest(X, y, params: dict | None = None, seed: int = 0) -> RandomForestClassifier:
    return RandomForestClassifier(**(params or {}), random_state=seed).fit(X, y)


def predict_forest(model: RandomForestClassifier, X) -> np.ndarray:
    return model.predict(X)


def top_k_importances(model: RandomForestClassifier, k: int = 5) -> list[tuple[str, float]]:
    """The ``k`` largest importances, descending; equal weights by feature name."""
    check_fitted(model, "feature_importances_")
    pairs = list(zip(model.feature_names, model.feature_importances_.tolist()))
    pairs.sort(key=lambda fw: (-fw[1], fw[0]))
    return pairs[: max(0, k)]
