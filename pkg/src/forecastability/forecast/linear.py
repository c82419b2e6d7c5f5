"""Multiple linear regression solved by a ridge-stabilised QR factorisation."""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.base import BaseEstimator, RegressorMixin

from .._validation import check_matrix, check_schema, check_target, remember_schema
from ..errors import DegenerateDesign


class LinearRegression(RegressorMixin, BaseEstimator):
    """Ordinary least squares with an intercept.

    The coefficients minimise ``||y - b0 - X b||^2 + ridge_eps * ||b||^2``
    (the intercept is not penalised).  The augmented system
    ``[1 X; 0 sqrt(eps) I] beta = [y; 0]`` is solved through a thin QR
    factorisation, which keeps exactly collinear designs (such as full
    one-hot calendar blocks next to an intercept) solvable.

    Parameters
    ----------
    ridge_eps : float, default=1e-8
        Diagonal stabiliser.  With ``0`` a rank-deficient design raises
        :class:`~forecastability.errors.DegenerateDesign`.

    Attributes
    ----------
    beta_ : ndarray of shape (n_features + 1,)
        ``[intercept, coef_1, ..., coef_p]``.
    intercept_, coef_ : views into ``beta_``.
    """

    def __init__(self, ridge_eps=1e-8):
        self.ridge_eps = ridge_eps

    def fit(self, X, y):
        X, names = check_matrix(X)
        y = check_target(y, X.shape[0])
        n, p = X.shape
        if self.ridge_eps < 0:
            raise ValueError("ridge_eps must be >= 0")
        if n < p + 1:
            raise DegenerateDesign(f"{n} rows cannot determine {p + 1} coefficients")
        A = np.hstack([np.ones((n, 1)), X])
        rhs = y
        if self.ridge_eps > 0:
            pen = np.hstack([np.zeros((p, 1)), np.sqrt(self.ridge_eps) * np.eye(p)])
            A = np.vstack([A, pen])
            rhs = np.concatenate([y, np.zeros(p)])
        Q, R = np.linalg.qr(A, mode="reduced")
        diag = np.abs(np.diag(R))
        tol = max(A.shape) * np.finfo(float).eps * (diag.max() if diag.size else 0.0)
        if diag.size and diag.min() <= tol:
            raise DegenerateDesign("design matrix is rank deficient")
        beta = solve_triangular(R, Q.T @ rhs, lower=False)
        if not np.all(np.isfinite(beta)):
            raise DegenerateDesign("least-squares solution is not finite")
        self.beta_ = beta
        self.intercept_ = float(beta[0])
        self.coef_ = beta[1:]
        remember_schema(self, names, p)
        return self

    def predict(self, X):
        X = check_schema(self, X)
        out = self.intercept_ + X @ self.coef_
        return out

    @property
    def column_names(self):
        names = getattr(self, "feature_names_in_", None)
        return None if names is None else list(names)


def fit_linreg(data, ridge_eps: float = 1e-8) -> LinearRegression:
    """Fit on a :class:`~forecastability.forecast.windowing.SupervisedSet`."""
    return LinearRegression(ridge_eps=ridge_eps).fit(data.X, data.y)


def predict_linreg(model: LinearRegression, X) -> np.ndarray:
    return model.predict(X)
