"""Least squares, ridge and lasso regressors.

Features are standardized before solving; coefficients are mapped back so
``LinearModel.predict`` works on raw feature values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from coverloop.errors import ConfigError, DataError


def check_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DataError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if X.shape[0] < 1:
        raise DataError("need at least one sample")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values in training data")
    return X, y


def _standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return (X - mean) / scale, mean, scale


@dataclass(frozen=True)
class LinearModel:
    algorithm: str
    coef: np.ndarray
    intercept: float

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        return X @ self.coef + self.intercept

    def params(self) -> dict:
        return {"coef": self.coef.tolist(), "intercept": self.intercept}

    @classmethod
    def from_params(cls, algorithm: str, p: dict) -> "LinearModel":
        return cls(algorithm, np.asarray(p["coef"], dtype=np.float64), float(p["intercept"]))


def _unscale(algorithm, w_std, mean, scale, y_mean) -> LinearModel:
    coef = w_std / scale
    return LinearModel(algorithm, coef, float(y_mean - mean @ coef))


def fit_ols(X, y) -> LinearModel:
    """Ordinary least squares; the minimum-norm solution when rank deficient."""
    X, y = check_xy(X, y)
    y_mean = y.mean()
    if X.shape[1] == 0:
        return LinearModel("linear", np.zeros(0), float(y_mean))
    Z, mean, scale = _standardize(X)
    w, *_ = np.linalg.lstsq(Z, y - y_mean, rcond=None)
    return _unscale("linear", w, mean, scale, y_mean)


def fit_ridge(X, y, lam: float = 0.1) -> LinearModel:
    """Minimize ``sum((Xw + b - y)**2) + lam * |w|**2`` with b unpenalized.

    The penalty is on raw-unit coefficients; in standardized coordinates it
    becomes ``lam / scale**2`` per feature, solved as an augmented least
    squares problem for conditioning.
    """
    if lam < 0:
        raise ConfigError("ridge penalty must be non-negative")
    X, y = check_xy(X, y)
    if lam == 0:
        return LinearModel("ridge", *_ols_parts(X, y))
    y_mean = y.mean()
    p = X.shape[1]
    if p == 0:
        return LinearModel("ridge", np.zeros(0), float(y_mean))
    Z, mean, scale = _standardize(X)
    A = np.vstack([Z, np.diag(np.sqrt(lam) / scale)])
    rhs = np.concatenate([y - y_mean, np.zeros(p)])
    w, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return _unscale("ridge", w, mean, scale, y_mean)


def _ols_parts(X, y):
    m = fit_ols(X, y)
    return m.coef, m.intercept


def soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def fit_lasso(X, y, lam: float = 0.1, tol: float = 1e-6, max_sweeps: int = 10_000) -> LinearModel:
    """Cyclic coordinate descent on ``(1/2n)|y - Zw|**2 + lam * |w|_1``.

    ``Z`` is the standardized design, so ``lam`` is in units of the target
    per standard deviation of a feature.
    """
    if lam < 0:
        raise ConfigError("lasso penalty must be non-negative")
    X, y = check_xy(X, y)
    n, p = X.shape
    y_mean = y.mean()
    if p == 0:
        return LinearModel("lasso", np.zeros(0), float(y_mean))
    Z, mean, scale = _standardize(X)
    col_sq = (Z * Z).sum(axis=0) / n
    w = np.zeros(p)
    resid = y - y_mean
    for _ in range(max_sweeps):
        max_delta = 0.0
        for j in range(p):
            if col_sq[j] == 0:
                continue
            zj = Z[:, j]
            rho = zj @ resid / n + col_sq[j] * w[j]
            # a margin over lam at rounding level is noise, not signal
            if abs(rho) - lam <= 8 * np.finfo(float).eps * max(abs(rho), lam):
                new = 0.0
            else:
                new = soft_threshold(rho, lam) / col_sq[j]
            delta = new - w[j]
            if delta != 0.0:
                resid -= delta * zj
                w[j] = new
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            break
    return _unscale("lasso", w, mean, scale, y_mean)
