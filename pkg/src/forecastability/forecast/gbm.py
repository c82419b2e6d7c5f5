"""Gradient-boosted regression trees grown leaf-wise.

Each boosting round fits one regression tree to the current residuals.  A
tree starts as a single leaf and is grown by repeatedly splitting the leaf
whose best split yields the largest reduction in squared error, until it has
``max_leaves`` leaves or no leaf has a split with positive gain.  Candidate
thresholds are midpoints between consecutive distinct feature values; there
is no histogram binning.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, RegressorMixin

from .._validation import check_matrix, check_schema, check_target, remember_schema
from ..errors import EmptySet

# splits improving the leaf's squared error by less than this fraction are float noise
_REL_GAIN_TOL = 1e-10


@dataclass
class RegressionTree:
    """Array-backed binary tree; ``feature == -1`` marks a leaf."""

    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)
    n_samples: list = field(default_factory=list)

    def add_node(self, value, n_samples):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        self.n_samples.append(int(n_samples))
        return len(self.feature) - 1

    def freeze(self):
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=float)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.value = np.asarray(self.value, dtype=float)
        self.n_samples = np.asarray(self.n_samples, dtype=np.int64)
        return self

    @property
    def n_leaves(self) -> int:
        return int(np.sum(np.asarray(self.feature) < 0))

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row (``x <= threshold`` goes left)."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            internal = f >= 0
            if not internal.any():
                return node
            go_left = X[rows, np.maximum(f, 0)] <= self.threshold[node]
            node = np.where(internal, np.where(go_left, self.left[node], self.right[node]), node)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {k: np.asarray(getattr(self, k)).tolist()
                for k in ("feature", "threshold", "left", "right", "value", "n_samples")}

    @classmethod
    def from_dict(cls, d) -> "RegressionTree":
        return cls(**{k: list(v) for k, v in d.items()}).freeze()


@njit(cache=True)
def _scan_splits(sorted_rows, sorted_vals, resid, min_samples_leaf):
    """Scan every feature of a leaf for the best squared-error split.

    ``sorted_rows`` / ``sorted_vals`` are p x m: per feature row, the leaf's
    row indices and feature values in ascending value order.  Returns
    ``(gain, feature, position)``; position ``i`` puts the first ``i + 1``
    sorted rows on the left.  Ties keep the lowest feature, then the lowest
    position.
    """
    p, m = sorted_rows.shape
    total = 0.0
    for k in range(m):
        total += resid[sorted_rows[0, k]]
    best, best_f, best_i = -np.inf, -1, -1
    for j in range(p):
        left = 0.0
        for i in range(m - 1):
            left += resid[sorted_rows[j, i]]
            n_left = i + 1
            if n_left < min_samples_leaf:
                continue
            if m - n_left < min_samples_leaf:
                break
            if sorted_vals[j, i] >= sorted_vals[j, i + 1]:
                continue
            right = total - left
            score = left * left / n_left + right * right / (m - n_left)
            if score > best:
                best, best_f, best_i = score, j, i
    if best_f < 0:
        return -np.inf, -1, -1
    return best - total * total / m, best_f, best_i


def _best_split(sorted_rows, sorted_vals, resid, min_samples_leaf):
    """Best ``(gain, feature, threshold)`` of a leaf, or feature -1 if none."""
    m = sorted_rows.shape[1]
    if m < 2 * min_samples_leaf or m < 2:
        return -np.inf, -1, 0.0
    gain, f, i = _scan_splits(sorted_rows, sorted_vals, resid, min_samples_leaf)
    if f < 0:
        return -np.inf, -1, 0.0
    lo, hi = sorted_vals[f, i], sorted_vals[f, i + 1]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return float(gain), int(f), float(thr)


@njit(cache=True)
def _partition(sorted_rows, sorted_vals, keep, n_keep):
    """Stable split of every sorted feature row by ``keep[row]``."""
    p, m = sorted_rows.shape
    lr = np.empty((p, n_keep), dtype=sorted_rows.dtype)
    lv = np.empty((p, n_keep), dtype=sorted_vals.dtype)
    rr = np.empty((p, m - n_keep), dtype=sorted_rows.dtype)
    rv = np.empty((p, m - n_keep), dtype=sorted_vals.dtype)
    for j in range(p):
        a = 0
        b = 0
        for i in range(m):
            r = sorted_rows[j, i]
            if keep[r]:
                lr[j, a] = r
                lv[j, a] = sorted_vals[j, i]
                a += 1
            else:
                rr[j, b] = r
                rv[j, b] = sorted_vals[j, i]
                b += 1
    return lr, lv, rr, rv


def grow_tree(X, resid, rows, order, sorted_X, max_leaves, min_samples_leaf) -> RegressionTree:
    """Fit one leaf-wise regression tree to ``resid`` on ``rows``.

    ``order`` (p x n) holds, per feature, all training row indices sorted by
    that feature and ``sorted_X`` the matching values.  Both are filtered to
    ``rows`` once and then partitioned stably at every split, so no leaf is
    ever re-sorted.
    """
    n_total = X.shape[0]
    if len(rows) == n_total:
        root_sorted, root_vals = order, sorted_X
    else:
        in_rows = np.zeros(n_total, dtype=np.bool_)
        in_rows[rows] = True
        root_sorted, root_vals, _, _ = _partition(order, sorted_X, in_rows, len(rows))

    tree = RegressionTree()
    root = tree.add_node(resid[rows].mean(), len(rows))
    heap = []
    members = {}

    def consider(node, sorted_rows, sorted_vals):
        gain, f, thr = _best_split(sorted_rows, sorted_vals, resid, min_samples_leaf)
        if f < 0 or gain <= 0:
            return
        r = resid[sorted_rows[0]]
        if gain > _REL_GAIN_TOL * float(np.sum((r - r.mean()) ** 2)):
            members[node] = (sorted_rows, sorted_vals)
            # max-heap on gain; node id breaks ties toward the older leaf
            heapq.heappush(heap, (-gain, node, f, thr))

    consider(root, root_sorted, root_vals)
    n_leaves = 1
    while heap and n_leaves < max_leaves:
        _, node, f, thr = heapq.heappop(heap)
        sorted_rows, sorted_vals = members.pop(node)
        goes_left = np.zeros(n_total, dtype=np.bool_)
        leaf_rows = sorted_rows[0]
        goes_left[leaf_rows] = X[leaf_rows, f] <= thr
        left_sorted, left_vals, right_sorted, right_vals = _partition(
            sorted_rows, sorted_vals, goes_left, int(goes_left.sum()))
        lnode = tree.add_node(resid[left_sorted[0]].mean(), left_sorted.shape[1])
        rnode = tree.add_node(resid[right_sorted[0]].mean(), right_sorted.shape[1])
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = lnode
        tree.right[node] = rnode
        n_leaves += 1
        consider(lnode, left_sorted, left_vals)
        consider(rnode, right_sorted, right_vals)
    return tree.freeze()


class GBMRegressor(RegressorMixin, BaseEstimator):
    """Squared-loss gradient boosting with leaf-wise tree growth.

    ``predict(X) = base_score_ + learning_rate * sum(tree(X) for tree in trees_)``
    where ``base_score_`` is the training mean of ``y`` and every leaf holds
    the mean residual of its training rows.

    Parameters
    ----------
    n_trees : int, default=100
    learning_rate : float in (0, 1], default=0.1
    max_leaves : int, default=31
    min_samples_leaf : int, default=20
    subsample : float in (0, 1], default=1.0
        Fraction of rows, drawn without replacement per round, used to grow
        each tree.  The training loss is only guaranteed non-increasing at 1.0.
    random_state : int, default=0
        Seeds the row subsampling; unused when ``subsample == 1``.

    Attributes
    ----------
    trees_ : list of RegressionTree
    train_loss_ : ndarray of shape (n_trees + 1,)
        Mean squared training error before the first and after each round.
    """

    def __init__(self, n_trees=100, learning_rate=0.1, max_leaves=31, min_samples_leaf=20,
                 subsample=1.0, random_state=0):
        self.n_trees = n_trees
        self.learning_rate = learning_rate
        self.max_leaves = max_leaves
        self.min_samples_leaf = min_samples_leaf
        self.subsample = subsample
        self.random_state = random_state

    def _check_params(self):
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_leaves < 1 or self.min_samples_leaf < 1 or self.n_trees < 0:
            raise ValueError("n_trees >= 0, max_leaves >= 1 and min_samples_leaf >= 1 required")
        if not 0 < self.subsample <= 1:
            raise ValueError("subsample must be in (0, 1]")

    def fit(self, X, y):
        self._check_params()
        X, names = check_matrix(X)
        if X.shape[0] == 0:
            raise EmptySet("cannot fit on zero rows")
        y = check_target(y, X.shape[0])
        n = X.shape[0]
        rng = np.random.default_rng(self.random_state)
        order = np.ascontiguousarray(np.argsort(X.T, axis=1, kind="stable"))
        sorted_X = np.take_along_axis(X.T, order, axis=1)
        self.base_score_ = float(np.mean(y))
        pred = np.full(n, self.base_score_)
        self.trees_ = []
        losses = [float(np.mean((y - pred) ** 2))]
        n_sub = max(1, int(round(self.subsample * n)))
        for _ in range(self.n_trees):
            resid = y - pred
            if n_sub < n:
                rows = np.sort(rng.choice(n, size=n_sub, replace=False))
            else:
                rows = np.arange(n)
            tree = grow_tree(X, resid, rows, order, sorted_X, self.max_leaves, self.min_samples_leaf)
            self.trees_.append(tree)
            pred = pred + self.learning_rate * tree.predict(X)
            losses.append(float(np.mean((y - pred) ** 2)))
        self.train_loss_ = np.asarray(losses)
        remember_schema(self, names, X.shape[1])
        return self

    def predict(self, X):
        X = check_schema(self, X)
        out = np.full(X.shape[0], self.base_score_)
        for tree in self.trees_:
            out += self.learning_rate * tree.predict(X)
        return out


def fit_gbm(data, params: dict | None = None) -> GBMRegressor:
    """Fit on a SupervisedSet.  ``params`` may use ``seed`` for ``random_state``."""
    params = dict(params or {})
    if "seed" in params:
        params["random_state"] = params.pop("seed")
    if len(data) == 0:
        raise EmptySet("cannot fit on zero rows")
    return GBMRegressor(**params).fit(data.X, data.y)


def predict_gbm(model: GBMRegressor, X) -> np.ndarray:
    return model.predict(X)
