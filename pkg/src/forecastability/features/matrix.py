"""Feature vectors, corpus feature matrices and their on-disk format."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from .._parallel import parallel_map
from .._validation import check_fitted
from ..errors import EmptyCorpus, NameCollision
from .agnostic import SeriesStats, check_length
from .informed import LoadShape
from .registry import AGNOSTIC, COMBINED, INFORMED, PREFIX, parse_family, registry, schema


@dataclass
class FeatureVector:
    """Ordered ``name -> value`` mapping tagged with its family."""

    values: dict
    family: str

    def __len__(self):
        return len(self.values)

    def __getitem__(self, name):
        return self.values[name]

    @property
    def names(self) -> list[str]:
        return list(self.values)

    def to_array(self) -> np.ndarray:
        return np.fromiter(self.values.values(), dtype=float, count=len(self.values))


def _evaluate(family, ctx) -> FeatureVector:
    return FeatureVector({spec.name: float(spec.func(ctx)) for spec in registry(family)}, family)


def extract_domain_agnostic(series, window: int = 48) -> FeatureVector:
    """Statistical features of a cleaned series; see the registry for definitions."""
    values = np.asarray(getattr(series, "values", series), dtype=float)
    check_length(values, window)
    return _evaluate(AGNOSTIC, SeriesStats(values, window))


def extract_domain_informed(series, frame) -> FeatureVector:
    """Load-shape features; needs the calendar of ``frame`` and >= 7 complete days."""
    values = np.asarray(getattr(series, "values", series), dtype=float)
    return _evaluate(INFORMED, LoadShape(values, frame))


def combine(a: FeatureVector, b: FeatureVector) -> FeatureVector:
    """Concatenate two base-family vectors under family-prefixed names."""
    if a.family == b.family or COMBINED in (a.family, b.family):
        raise ValueError("combine needs one vector of each base family")
    out = {}
    for vec in (a, b) if a.family == INFORMED else (b, a):
        for name, v in vec.values.items():
            key = PREFIX[vec.family] + name
            if key in out:
                raise NameCollision(key)
            out[key] = v
    return FeatureVector(out, COMBINED)


def extract(series, frame, family: str, window: int = 48) -> FeatureVector:
    family = parse_family(family)
    if family == AGNOSTIC:
        return extract_domain_agnostic(series, window)
    if family == INFORMED:
        return extract_domain_informed(series, frame)
    return combine(extract_domain_informed(series, frame), extract_domain_agnostic(series, window))


@dataclass
class FeatureMatrix:
    """Buildings x features; ``audit`` lists every NaN repair."""

    frame: pd.DataFrame
    family: str
    audit: list = field(default_factory=list)

    @property
    def shape(self):
        return self.frame.shape

    @property
    def building_ids(self) -> list[str]:
        return list(self.frame.index)

    @property
    def columns(self) -> list[str]:
        return list(self.frame.columns)

    def to_csv(self) -> str:
        return self.frame.to_csv(index=True, index_label="building_id")

    def schema_json(self) -> str:
        cols = {spec.name: {"definition": spec.definition, "scaling": spec.scaling,
                            "scale_power": spec.scale_power, "family": spec.family}
                for spec in schema(self.family)}
        return json.dumps({"family": self.family, "columns": [c for c in self.columns],
                           "features": cols, "nan_repairs": self.audit}, indent=2)

    @classmethod
    def read_csv(cls, path, family) -> "FeatureMatrix":
        df = pd.read_csv(path, dtype={"building_id": str}, float_precision="round_trip")
        df = df.set_index("building_id")
        return cls(df, parse_family(family))


class SeriesFeaturizer(TransformerMixin, BaseEstimator):
    """Corpus -> feature DataFrame with median repair of non-finite values.

    ``fit`` records, per column, the median over the finite values of the
    fitting corpus (0.0 for a column without any); ``transform`` extracts
    every building and replaces non-finite cells by those medians, logging
    each replacement in ``audit_``.

    Parameters
    ----------
    family : {"informed", "agnostic", "combined"}
    window : int, default=48
        Tile width of the agnostic stability and lumpiness features.
    n_jobs : int, default=1
        Worker processes for the per-building extraction.
    """

    def __init__(self, family="combined", window=48, n_jobs=1):
        self.family = family
        self.window = window
        self.n_jobs = n_jobs

    def _raw(self, corpus) -> pd.DataFrame:
        if not corpus:
            raise EmptyCorpus("no buildings to featurize")
        family = parse_family(self.family)
        ids = sorted(corpus)
        jobs = [(corpus[b][0].values, corpus[b][1], family, self.window) for b in ids]
        rows = parallel_map(_extract_row, jobs, self.n_jobs)
        names = [spec.name for spec in schema(family)]
        return pd.DataFrame(rows, index=pd.Index(ids, name="building_id"), columns=names)

    def fit(self, corpus, y=None):
        raw = self._raw(corpus)
        self._fit_medians(raw)
        return self

    def _fit_medians(self, raw):
        med = {}
        for col in raw.columns:
            v = raw[col].to_numpy(dtype=float)
            v = v[np.isfinite(v)]
            med[col] = float(np.median(v)) if v.size else 0.0
        self.medians_ = med
        self.feature_names_out_ = list(raw.columns)

    def _repair(self, raw):
        out = raw.copy()
        audit = []
        for col in raw.columns:
            v = raw[col].to_numpy(dtype=float)
            for i in np.flatnonzero(~np.isfinite(v)):
                audit.append({"building_id": raw.index[i], "feature": col,
                              "original": None if np.isnan(v[i]) else repr(float(v[i])),
                              "replacement": self.medians_[col]})
                out.iat[i, raw.columns.get_loc(col)] = self.medians_[col]
        self.audit_ = audit
        return out

    def transform(self, corpus):
        check_fitted(self, "medians_")
        return self._repair(self._raw(corpus))

    def fit_transform(self, corpus, y=None):
        raw = self._raw(corpus)
        self._fit_medians(raw)
        return self._repair(raw)

    def get_feature_names_out(self, input_features=None):
        check_fitted(self, "feature_names_out_")
        return np.asarray(self.feature_names_out_, dtype=object)


def _extract_row(job):
    values, frame, family, window = job
    return extract(values, frame, family, window).to_array()


def matrix_from_raw(raw: pd.DataFrame, family) -> FeatureMatrix:
    """Median-repair an already extracted ``buildings x features`` table."""
    fz = SeriesFeaturizer(family=family)
    fz._fit_medians(raw)
    frame = fz._repair(raw)
    return FeatureMatrix(frame, parse_family(family), fz.audit_)


def assemble_matrix(corpus, family, n_jobs: int = 1) -> FeatureMatrix:
    """One row per building (sorted by id) with corpus-median NaN repair."""
    fz = SeriesFeaturizer(family=family, n_jobs=n_jobs)
    frame = fz.fit_transform(corpus)
    return FeatureMatrix(frame, parse_family(family), fz.audit_)
