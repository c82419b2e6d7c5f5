"""Best-forecaster labels and the labeled feature matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import MissingScore, UnknownLabel
from ..kinds import ALL_KINDS, ModelKind

LABEL_COLUMN = "label"


def best_kind(rmse_by_kind: dict) -> ModelKind:
    """Lowest RMSE; exact ties go to the simpler model (ModelKind order)."""
    scores = {ModelKind.parse(k): float(v) for k, v in rmse_by_kind.items()}
    missing = [k for k in ALL_KINDS if k not in scores or not np.isfinite(scores[k])]
    if missing:
        raise MissingScore(", ".join(str(k) for k in missing))
    return min(ALL_KINDS, key=lambda k: (scores[k], int(k)))


def make_labels(reports) -> dict:
    """``building_id -> ModelKind`` from ForecastReports or plain score dicts.

    ``reports`` is either an iterable of objects with ``building_id`` and
    ``rmse_by_kind`` or a mapping ``building_id -> {kind: rmse}``.
    """
    if isinstance(reports, dict):
        items = reports.items()
    else:
        items = ((r.building_id, r.rmse_by_kind()) for r in reports)
    out = {}
    for bid, scores in items:
        try:
            out[bid] = best_kind(scores)
        except MissingScore as exc:
            raise MissingScore(f"building {bid}: {exc}") from None
    return out


@dataclass
class LabeledMatrix:
    """Feature rows plus one forecaster label per row (aligned by index)."""

    features: pd.DataFrame
    labels: pd.Series

    def __post_init__(self):
        if not self.features.index.equals(self.labels.index):
            raise ValueError("feature and label indices differ")
        for v in self.labels:
            if str(v) not in {str(k) for k in ALL_KINDS}:
                raise UnknownLabel(str(v))

    @classmethod
    def from_matrix(cls, features: pd.DataFrame, labels: dict) -> "LabeledMatrix":
        missing = [b for b in features.index if b not in labels]
        if missing:
            raise MissingScore(f"no label for buildings {missing[:5]}")
        lab = pd.Series([str(labels[b]) for b in features.index], index=features.index,
                        name=LABEL_COLUMN)
        return cls(features, lab)

    def __len__(self):
        return len(self.features)

    @property
    def X(self) -> pd.DataFrame:
        return self.features

    @property
    def y(self) -> np.ndarray:
        return self.labels.to_numpy(dtype=object)

    def take(self, positions) -> "LabeledMatrix":
        positions = np.asarray(positions, dtype=np.int64)
        return LabeledMatrix(self.features.iloc[positions], self.labels.iloc[positions])

    def counts(self) -> dict:
        """Rows per ModelKind, all four kinds present (zero if unused)."""
        vc = self.labels.value_counts()
        return {str(k): int(vc.get(str(k), 0)) for k in ALL_KINDS}

    def to_csv(self) -> str:
        df = self.features.copy()
        df[LABEL_COLUMN] = self.labels
        return df.to_csv(index=True, index_label="building_id")

    @classmethod
    def read_csv(cls, path) -> "LabeledMatrix":
        df = pd.read_csv(path, dtype={"building_id": str, LABEL_COLUMN: str},
                         float_precision="round_trip").set_index("building_id")
        return cls(df.drop(columns=[LABEL_COLUMN]), df[LABEL_COLUMN].rename(LABEL_COLUMN))
