"""Per-coverbin regressors predicting the dependent stimulus field."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from coverloop.dataprep import Assignment, PreparedDataset
from coverloop.errors import ConfigError
from coverloop.ml.boost import AdaBoostModel, fit_adaboost_r2, weighted_median
from coverloop.ml.linear import LinearModel, fit_lasso, fit_ols, fit_ridge
from coverloop.ml.neighbors import KNNModel, fit_knn
from coverloop.ml.tree import ForestModel, TreeModel, fit_forest, fit_tree
from coverloop.runner import Dataset
from coverloop.stimulus import Rng, derive_seed

ALGORITHMS = ("linear", "lasso", "ridge", "dt", "rf", "adaboost", "knn")

DEFAULT_HYPERPARAMS: dict[str, dict] = {
    "linear": {},
    "lasso": {"lam": 0.1},
    "ridge": {"lam": 0.1},
    "dt": {"max_depth": 6, "min_leaf": 2},
    "rf": {"n_trees": 20, "max_depth": 6, "min_leaf": 2},
    "adaboost": {"n_estimators": 20, "max_depth": 3},
    "knn": {"k": 5},
}

HIT_FEATURE = "__hit__"

_MODEL_TYPES = {
    "linear": LinearModel,
    "lasso": LinearModel,
    "ridge": LinearModel,
    "dt": TreeModel,
    "rf": ForestModel,
    "adaboost": AdaBoostModel,
    "knn": KNNModel,
}


def parse_algorithms(text: str | list[str]) -> list[str]:
    names = text.split(",") if isinstance(text, str) else list(text)
    names = [n.strip().lower() for n in names if n.strip()]
    if not names:
        raise ConfigError("algorithm list is empty")
    for n in names:
        if n not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {n!r}; choose from {', '.join(ALGORITHMS)}")
    return list(dict.fromkeys(names))


def fit(algorithm: str, X, y, seed: int = 0, **hyperparams):
    hp = {**DEFAULT_HYPERPARAMS[algorithm], **hyperparams}
    if algorithm == "linear":
        return fit_ols(X, y)
    if algorithm == "ridge":
        return fit_ridge(X, y, hp["lam"])
    if algorithm == "lasso":
        return fit_lasso(X, y, hp["lam"])
    if algorithm == "knn":
        return fit_knn(X, y, min(hp["k"], len(y)))
    if algorithm == "dt":
        return fit_tree(X, y, hp["max_depth"], hp["min_leaf"])
    if algorithm == "rf":
        return fit_forest(X, y, hp["n_trees"], hp["max_depth"], hp["min_leaf"], rng=Rng(seed))
    if algorithm == "adaboost":
        return fit_adaboost_r2(X, y, hp["n_estimators"], hp["max_depth"])
    raise ConfigError(f"unknown algorithm {algorithm!r}")


@dataclass(frozen=True)
class BinModel:
    """A fitted regressor plus the bookkeeping needed to query it."""

    bin: str
    dependent: str
    features: tuple[str, ...]
    model: object

    @property
    def algorithm(self) -> str:
        return self.model.algorithm

    def predict(self, X) -> np.ndarray:
        return self.model.predict(X)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "bin": self.bin,
            "dependent": self.dependent,
            "features": list(self.features),
            "params": self.model.params(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict()) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "BinModel":
        alg = doc["algorithm"]
        model = _MODEL_TYPES[alg].from_params(alg, doc["params"])
        return cls(doc["bin"], doc["dependent"], tuple(doc["features"]), model)

    @classmethod
    def load(cls, path: str | Path) -> "BinModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def design_matrix(rows: Dataset, a: Assignment) -> tuple[np.ndarray, np.ndarray]:
    """Independent field columns followed by the bin's hit flag; label is the dependent field."""
    cols = [rows.column(f) for f in a.independents] + [rows.column(a.bin)]
    X = np.column_stack(cols) if cols else np.zeros((len(rows), 0))
    return X, rows.column(a.dependent)


def train_per_bin(
    prepared: PreparedDataset,
    algorithm: str,
    hyperparams: dict | None = None,
    seed: int = 0,
) -> tuple[dict[str, BinModel], dict[str, str]]:
    """One model per learnable bin. Unlearnable bins come back in the exclusion map."""
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    hp = hyperparams or {}
    models = {}
    for name, a in prepared.assignments.items():
        X, y = design_matrix(prepared.rows, a)
        m = fit(algorithm, X, y, seed=derive_seed(seed, algorithm, name), **hp)
        models[name] = BinModel(name, a.dependent, (*a.independents, HIT_FEATURE), m)
    return models, dict(prepared.excluded)


__all__ = [
    "ALGORITHMS",
    "AdaBoostModel",
    "BinModel",
    "DEFAULT_HYPERPARAMS",
    "ForestModel",
    "KNNModel",
    "LinearModel",
    "TreeModel",
    "design_matrix",
    "fit",
    "fit_adaboost_r2",
    "fit_forest",
    "fit_knn",
    "fit_lasso",
    "fit_ols",
    "fit_ridge",
    "fit_tree",
    "parse_algorithms",
    "train_per_bin",
    "weighted_median",
]
