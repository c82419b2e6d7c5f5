"""Point-forecast errors and classification assessment."""
from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, EmptyMatrix, LengthMismatch, UnknownLabel


def _pair(y, y_hat):
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise LengthMismatch(f"{y.size} actual vs {y_hat.size} predicted values")
    if y.size == 0:
        raise EmptyInput("no values to score")
    return y, y_hat


def mae(y, y_hat) -> float:
    """Mean absolute error."""
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def rmse(y, y_hat) -> float:
    """Root mean squared error."""
    y, y_hat = _pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


@dataclass
class ConfusionMatrix:
    """Counts with rows = actual label, columns = predicted label."""

    labels: list
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict:
        return {"labels": [str(lab) for lab in self.labels], "counts": self.counts.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        names = [str(lab) for lab in self.labels]
        buf.write("actual\\predicted," + ",".join(names) + "\n")
        for name, row in zip(names, self.counts):
            buf.write(name + "," + ",".join(str(int(c)) for c in row) + "\n")
        return buf.getvalue()


def confusion(actual, predicted, labels) -> ConfusionMatrix:
    actual, predicted, labels = list(actual), list(predicted), list(labels)
    if len(actual) != len(predicted):
        raise LengthMismatch(f"{len(actual)} actual vs {len(predicted)} predicted labels")
    pos = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for a, p in zip(actual, predicted):
        if a not in pos or p not in pos:
            raise UnknownLabel(f"label {a if a not in pos else p!r} not in {labels}")
        counts[pos[a], pos[p]] += 1
    return ConfusionMatrix(labels, counts)


def _ratio(num, den):
    return float(num) / float(den) if den else 0.0


@dataclass
class ClassificationReport:
    labels: list
    precision: list
    recall: list
    f1: list
    support: list
    accuracy: float

    @property
    def macro_f1(self) -> float:
        return float(np.mean(self.f1)) if self.f1 else 0.0

    @property
    def weighted_f1(self) -> float:
        total = sum(self.support)
        return _ratio(sum(f * s for f, s in zip(self.f1, self.support)), total)

    @property
    def weighted_recall(self) -> float:
        # equals accuracy; reported because weighted averages are a common headline number
        total = sum(self.support)
        return _ratio(sum(r * s for r, s in zip(self.recall, self.support)), total)

    def to_dict(self) -> dict:
        per_label = {
            str(lab): {"precision": p, "recall": r, "f1": f, "support": s}
            for lab, p, r, f, s in zip(self.labels, self.precision, self.recall, self.f1, self.support)
        }
        return {
            "labels": per_label,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "weighted_recall": self.weighted_recall,
            "total": int(sum(self.support)),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def report(cm: ConfusionMatrix) -> ClassificationReport:
    """Per-label precision, recall and F1 plus accuracy; 0/0 ratios are 0."""
    counts = np.asarray(cm.counts)
    total = counts.sum()
    if total == 0:
        raise EmptyMatrix("confusion matrix has no instances")
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    support = counts.sum(axis=1)
    precision = [_ratio(t, p) for t, p in zip(tp, predicted)]
    recall = [_ratio(t, s) for t, s in zip(tp, support)]
    f1 = [_ratio(2 * p * r, p + r) for p, r in zip(precision, recall)]
    return ClassificationReport(
        labels=list(cm.labels),
        precision=precision,
        recall=recall,
        f1=f1,
        support=[int(s) for s in support],
        accuracy=_ratio(tp.sum(), total),
    )
