"""Gini classification trees with per-split random feature subsets."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

# sentinel for "no depth limit" inside the compiled builder
_UNLIMITED = -1


@njit(cache=True)
def _build(X, y, n_classes, max_depth, min_samples_leaf, max_features, seed):
    """Depth-first tree growth; returns node arrays.

    At every node the features are visited in a random order until
    ``max_features`` non-constant ones have been scanned (more are scanned
    only while no valid split has been found).  The split maximising the
    Gini impurity decrease wins; ties keep the lowest feature index, then
    the lowest threshold.
    """
    np.random.seed(seed)
    n, p = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    counts = np.zeros((cap, n_classes))
    decrease = np.zeros(cap)
    depth_of = np.zeros(cap, dtype=np.int64)
    idx = np.arange(n)
    # stack entries: node, start, end
    stack = np.empty((cap, 3), dtype=np.int64)
    top = 0
    stack[top] = (0, 0, n)
    top += 1
    n_nodes = 1
    cl = np.zeros(n_classes)
    while top > 0:
        top -= 1
        node, start, end = stack[top]
        m = end - start
        for k in range(start, end):
            counts[node, y[idx[k]]] += 1.0
        sq = 0.0
        for c in range(n_classes):
            sq += counts[node, c] * counts[node, c]
        gini = 1.0 - sq / (m * m)
        if gini <= 0.0 or m < 2 * min_samples_leaf or m < 2:
            continue
        if max_depth >= 0 and depth_of[node] >= max_depth:
            continue
        perm = np.random.permutation(p)
        best_proxy = -np.inf
        best_f = -1
        best_pos = -1
        best_thr = 0.0
        scanned = 0
        for fi in range(p):
            if scanned >= max_features and best_f >= 0:
                break
            f = perm[fi]
            seg = idx[start:end]
            vals = X[seg, f]
            order = np.argsort(vals, kind="mergesort")
            xs = vals[order]
            if xs[0] == xs[m - 1]:
                continue
            scanned += 1
            ys = y[seg[order]]
            cl[:] = 0.0
            sl = 0.0
            for i in range(m - 1):
                c = ys[i]
                sl += 2.0 * cl[c] + 1.0
                cl[c] += 1.0
                nl = i + 1
                if nl < min_samples_leaf:
                    continue
                if m - nl < min_samples_leaf:
                    break
                if xs[i] >= xs[i + 1]:
                    continue
                sr = 0.0
                for cc in range(n_classes):
                    r = counts[node, cc] - cl[cc]
                    sr += r * r
                proxy = sl / nl + sr / (m - nl)
                better = proxy > best_proxy
                if not better and proxy == best_proxy and f < best_f:
                    better = True
                if better:
                    best_proxy = proxy
                    best_f = f
                    best_pos = i
                    lo = xs[i]
                    hi = xs[i + 1]
                    thr = lo + (hi - lo) / 2.0
                    if not (lo <= thr and thr < hi):
                        thr = lo
                    best_thr = thr
        if best_f < 0:
            continue
        # weighted impurity decrease: m * gini - (nL * giniL + nR * giniR)
        decrease[node] = best_proxy - sq / m
        seg = idx[start:end].copy()
        order = np.argsort(X[seg, best_f], kind="mergesort")
        idx[start:end] = seg[order]
        mid = start + best_pos + 1
        feature[node] = best_f
        threshold[node] = best_thr
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        depth_of[lnode] = depth_of[node] + 1
        depth_of[rnode] = depth_of[node] + 1
        stack[top] = (rnode, mid, end)
        top += 1
        stack[top] = (lnode, start, mid)
        top += 1
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            counts[:n_nodes], decrease[:n_nodes])


@dataclass
class ClassificationTree:
    """Array-backed classification tree; ``feature == -1`` marks a leaf.

    ``counts[node]`` are the training class counts reaching the node and
    ``decrease[node]`` the size-weighted Gini decrease of its split.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    decrease: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def leaf_class(self) -> np.ndarray:
        """Majority class code per node (lowest code on ties)."""
        return np.argmax(self.counts, axis=1)

    def apply(self, X) -> np.ndarray:
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

    def predict_codes(self, X) -> np.ndarray:
        return self.leaf_class[self.apply(X)]

    def importances(self, n_features: int) -> np.ndarray:
        """Unnormalised impurity decrease summed per feature."""
        out = np.zeros(n_features)
        internal = self.feature >= 0
        np.add.at(out, self.feature[internal], self.decrease[internal])
        return out

    def to_record(self, feature_names, classes, node: int = 0) -> dict:
        """Nested split/leaf dictionary rooted at ``node``."""
        f = int(self.feature[node])
        if f < 0:
            return {"leaf": True, "label": str(classes[int(self.leaf_class[node])]),
                    "counts": self.counts[node].tolist()}
        return {
            "leaf": False,
            "feature": str(feature_names[f]),
            "feature_index": f,
            "threshold": float(self.threshold[node]),
            "decrease": float(self.decrease[node]),
            "counts": self.counts[node].tolist(),
            "left": self.to_record(feature_names, classes, int(self.left[node])),
            "right": self.to_record(feature_names, classes, int(self.right[node])),
        }

    @classmethod
    def from_record(cls, record) -> "ClassificationTree":
        feature, threshold, left, right, counts, decrease = [], [], [], [], [], []

        def visit(rec):
            node = len(feature)
            feature.append(-1 if rec["leaf"] else int(rec["feature_index"]))
            threshold.append(0.0 if rec["leaf"] else float(rec["threshold"]))
            left.append(-1)
            right.append(-1)
            counts.append(list(rec["counts"]))
            decrease.append(0.0 if rec["leaf"] else float(rec["decrease"]))
            if not rec["leaf"]:
                left[node] = visit(rec["left"])
                right[node] = visit(rec["right"])
            return node

        visit(record)
        return cls(np.asarray(feature, dtype=np.int64), np.asarray(threshold, dtype=float),
                   np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
                   np.asarray(counts, dtype=float), np.asarray(decrease, dtype=float))


def resolve_features_per_split(value, n_features: int) -> int:
    """``"sqrt"`` -> ceil(sqrt(p)), ``"third"`` -> max(1, p // 3), ``None`` -> p, int -> clamp."""
    if value is None:
        k = n_features
    elif value == "sqrt":
        k = math.ceil(math.sqrt(n_features))
    elif value == "third":
        k = max(1, n_features // 3)
    elif isinstance(value, (int, np.integer)):
        k = int(value)
    else:
        raise ValueError(f"features_per_split must be 'sqrt', 'third', None or int, got {value!r}")
    return max(1, min(k, n_features))


def fit_tree(X, y_codes, n_classes, *, max_depth=None, min_samples_leaf=1,
             features_per_split="sqrt", seed=0) -> ClassificationTree:
    """Grow one tree on the given rows (no resampling here)."""
    X = np.ascontiguousarray(X, dtype=float)
    y_codes = np.ascontiguousarray(y_codes, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("cannot grow a tree on zero rows")
    k = resolve_features_per_split(features_per_split, X.shape[1])
    depth = _UNLIMITED if max_depth is None else int(max_depth)
    arrays = _build(X, y_codes, int(n_classes), depth, int(min_samples_leaf), k,
                    int(seed) % (2**32 - 1))
    return ClassificationTree(*[np.array(a) for a in arrays])
