"""AdaBoost.R2 (Drucker 1997) with linear loss over shallow trees.

Each round refits a tree on the current sample weights directly rather than
on a weighted resample, which keeps the ensemble a pure function of the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from coverloop.errors import ConfigError
from coverloop.ml.linear import check_xy
from coverloop.ml.tree import TreeModel, fit_tree


def weighted_median(values, weights) -> float:
    """Smallest value whose cumulative weight reaches half the total."""
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    i = int(np.searchsorted(cum, 0.5 * cum[-1], side="left"))
    return float(values[order][i])


@dataclass(frozen=True)
class AdaBoostModel:
    trees: tuple[TreeModel, ...]
    weights: np.ndarray
    algorithm: str = "adaboost"

    def predict(self, X) -> np.ndarray:
        preds = np.array([t.predict(X) for t in self.trees])  # (n_est, n_rows)
        order = np.argsort(preds, axis=0, kind="stable")
        sorted_w = self.weights[order]
        cum = np.cumsum(sorted_w, axis=0)
        pick = (cum >= 0.5 * cum[-1]).argmax(axis=0)
        rows = np.arange(preds.shape[1])
        return preds[order[pick, rows], rows]

    def params(self) -> dict:
        return {"weights": self.weights.tolist(), "trees": [t.params() for t in self.trees]}

    @classmethod
    def from_params(cls, algorithm: str, p: dict) -> "AdaBoostModel":
        return cls(
            tuple(TreeModel.from_params("dt", t) for t in p["trees"]),
            np.asarray(p["weights"], dtype=np.float64),
            algorithm,
        )


def fit_adaboost_r2(X, y, n_estimators: int = 20, max_depth: int = 3, min_leaf: int = 1) -> AdaBoostModel:
    if n_estimators < 1:
        raise ConfigError("n_estimators must be >= 1")
    X, y = check_xy(X, y)
    n = len(y)
    sw = np.full(n, 1.0 / n)
    trees: list[TreeModel] = []
    alphas: list[float] = []
    for _ in range(n_estimators):
        tree = fit_tree(X, y, max_depth, min_leaf, sample_weight=sw)
        err = np.abs(tree.predict(X) - y)
        d = err.max()
        if d == 0.0 or float((sw * err).sum()) == 0.0:
            trees.append(tree)
            alphas.append(1.0)
            break
        loss = err / d
        avg = float((sw * loss).sum())
        if avg >= 0.5:
            if not trees:
                trees.append(tree)
                alphas.append(1.0)
            break
        beta = avg / (1.0 - avg)
        trees.append(tree)
        alphas.append(float(np.log(1.0 / beta)))
        sw = sw * beta ** (1.0 - loss)
        sw /= sw.sum()
    return AdaBoostModel(tuple(trees), np.array(alphas))
