"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.exceptions import NotFittedError

from .errors import SchemaMismatch


def check_matrix(X, *, allow_nan=False):
    """Return ``(array, column_names)`` for a 2-D numeric input.

    ``column_names`` is ``None`` unless ``X`` is a DataFrame.
    """
    names = None
    if isinstance(X, pd.DataFrame):
        names = [str(c) for c in X.columns]
        X = X.to_numpy(dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if names is None else X.reshape(-1, len(names))
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D input, got shape {X.shape}")
    if not allow_nan and not np.all(np.isfinite(X)):
        raise ValueError("input contains non-finite values")
    if names is not None and len(set(names)) != len(names):
        raise ValueError("duplicate column names")
    return X, names


def check_target(y, n_rows):
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] != n_rows:
        raise ValueError(f"X has {n_rows} rows but y has {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise ValueError("target contains non-finite values")
    return y


def remember_schema(est, X_names, n_features):
    est.n_features_in_ = n_features
    if X_names is not None:
        est.feature_names_in_ = np.asarray(X_names, dtype=object)
    elif hasattr(est, "feature_names_in_"):
        del est.feature_names_in_


def check_schema(est, X):
    """Validate ``X`` against the columns seen during ``fit``."""
    check_fitted(est, "n_features_in_")
    X, names = check_matrix(X)
    trained = getattr(est, "feature_names_in_", None)
    if names is not None and trained is not None:
        if list(names) != list(trained):
            raise SchemaMismatch(
                f"columns {names[:5]}... do not match training columns {list(trained)[:5]}...")
    elif X.shape[1] != est.n_features_in_:
        raise SchemaMismatch(f"expected {est.n_features_in_} features, got {X.shape[1]}")
    return X


def check_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet")
