from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from coverloop.errors import ConfigError
from coverloop.ml.linear import check_xy


@dataclass(frozen=True)
class KNNModel:
    """k-nearest-neighbour mean on raw (unscaled) features."""

    X: np.ndarray
    y: np.ndarray
    k: int
    algorithm: str = "knn"

    def predict(self, Q) -> np.ndarray:
        Q = np.asarray(Q, dtype=np.float64)
        if Q.ndim == 1:
            Q = Q.reshape(-1, self.X.shape[1])
        out = np.empty(len(Q))
        for i, q in enumerate(Q):
            d2 = ((self.X - q) ** 2).sum(axis=1)
            # stable sort: equal distances keep training-row order
            nearest = np.argsort(d2, kind="stable")[: self.k]
            out[i] = self.y[nearest].mean()
        return out

    def params(self) -> dict:
        return {"k": self.k, "X": self.X.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_params(cls, algorithm: str, p: dict) -> "KNNModel":
        X = np.asarray(p["X"], dtype=np.float64)
        return cls(X.reshape(len(p["y"]), -1), np.asarray(p["y"], dtype=np.float64), int(p["k"]))


def fit_knn(X, y, k: int = 5) -> KNNModel:
    X, y = check_xy(X, y)
    if not 1 <= k <= len(y):
        raise ConfigError(f"k must be in [1, {len(y)}], got {k}")
    return KNNModel(X.copy(), y.copy(), int(k))
