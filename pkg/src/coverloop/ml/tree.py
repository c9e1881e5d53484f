"""CART regression trees (variance reduction) and bagged forests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from coverloop.errors import ConfigError
from coverloop.ml.linear import check_xy
from coverloop.stimulus import Rng

# relative gain difference below which two candidate splits count as tied
GAIN_TIE_RTOL = 1e-9
LEAF = -1


@dataclass(frozen=True)
class TreeModel:
    """Flat node arrays; node 0 is the root. Rows with ``x[feature] <= threshold`` go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    algorithm: str = "dt"

    @property
    def n_nodes(self) -> int:
        return len(self.value)

    @property
    def depth(self) -> int:
        def d(i):
            if self.feature[i] == LEAF:
                return 0
            return 1 + max(d(self.left[i]), d(self.right[i]))

        return d(0)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        out = np.empty(len(X))
        stack = [(0, np.arange(len(X)))]
        while stack:
            node, rows = stack.pop()
            f = self.feature[node]
            if f == LEAF:
                out[rows] = self.value[node]
                continue
            go_left = X[rows, f] <= self.threshold[node]
            stack.append((self.left[node], rows[go_left]))
            stack.append((self.right[node], rows[~go_left]))
        return out

    def params(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_params(cls, algorithm: str, p: dict) -> "TreeModel":
        return cls(
            np.asarray(p["feature"], dtype=np.int64),
            np.asarray(p["threshold"], dtype=np.float64),
            np.asarray(p["left"], dtype=np.int64),
            np.asarray(p["right"], dtype=np.int64),
            np.asarray(p["value"], dtype=np.float64),
            algorithm,
        )


def _best_split(X, y, w, rows, features, min_leaf):
    """Return (gain, feature, threshold) of the best split of ``rows``, or None.

    Among candidates whose gain is within tolerance of the maximum, the one
    with the smallest (feature, threshold) wins.
    """
    yr, wr = y[rows], w[rows]
    W = wr.sum()
    mu = (wr * yr).sum() / W
    yc = yr - mu
    sse_parent = float((wr * yc * yc).sum())
    if sse_parent <= 0.0:
        return None
    tie = GAIN_TIE_RTOL * sse_parent
    n = len(rows)
    count_left = np.arange(1, n)
    per_feature = []
    for f in features:
        xs = X[rows, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        ys = yc[order]
        ws = wr[order]
        cw = np.cumsum(ws)[:-1]
        cs = np.cumsum(ws * ys)[:-1]
        cq = np.cumsum(ws * ys * ys)[:-1]
        rw = W - cw
        with np.errstate(divide="ignore", invalid="ignore"):
            # right-hand sum of centered y is -cs
            sse = (cq - cs * cs / cw) + ((sse_parent - cq) - cs * cs / rw)
        gain = sse_parent - sse
        valid = (xs[:-1] < xs[1:]) & (count_left >= min_leaf) & (n - count_left >= min_leaf)
        valid &= (cw > 0) & (rw > 0) & (gain > tie)
        if valid.any():
            per_feature.append((int(f), xs, np.where(valid, gain, -np.inf)))
    if not per_feature:
        return None
    g_max = max(float(g.max()) for _, _, g in per_feature)
    for f, xs, g in sorted(per_feature, key=lambda t: t[0]):
        hits = np.flatnonzero(g >= g_max - tie)
        if len(hits):
            i = int(hits[0])
            t = 0.5 * (xs[i] + xs[i + 1])
            if not t < xs[i + 1]:
                t = float(xs[i])
            return float(g[i]), f, float(t)
    return None


def fit_tree(
    X,
    y,
    max_depth: int = 6,
    min_leaf: int = 2,
    sample_weight=None,
    max_features: int | None = None,
    rng: Rng | None = None,
    algorithm: str = "dt",
) -> TreeModel:
    """Greedy CART tree.

    Candidate thresholds are midpoints between consecutive distinct values.
    Equal gains resolve to the lower feature index, then the lower threshold.
    With ``max_features`` set, each split draws that many features from ``rng``.
    """
    if max_depth < 0:
        raise ConfigError("max_depth must be >= 0")
    if min_leaf < 1:
        raise ConfigError("min_leaf must be >= 1")
    X, y = check_xy(X, y)
    n, p = X.shape
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    if max_features is not None and rng is None:
        raise ConfigError("feature subsampling needs an rng")

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        value.append(float((w[rows] * y[rows]).sum() / w[rows].sum()))
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        return len(value) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if depth >= max_depth or len(rows) < 2 * min_leaf:
            continue
        if max_features is None or max_features >= p:
            features = range(p)
        else:
            features = sorted(_sample_without_replacement(rng, p, max_features))
        split = _best_split(X, y, w, rows, features, min_leaf)
        if split is None:
            continue
        _, f, t = split
        mask = X[rows, f] <= t
        li = new_node(rows[mask])
        ri = new_node(rows[~mask])
        feature[node], threshold[node], left[node], right[node] = f, t, li, ri
        # right pushed first so the left subtree is numbered first
        stack.append((ri, rows[~mask], depth + 1))
        stack.append((li, rows[mask], depth + 1))

    return TreeModel(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
        algorithm,
    )


def _sample_without_replacement(rng: Rng, n: int, k: int) -> list[int]:
    pool = list(range(n))
    for i in range(k):
        j = i + rng.below(n - i)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeModel, ...]
    algorithm: str = "rf"

    def predict(self, X) -> np.ndarray:
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    def params(self) -> dict:
        return {"trees": [t.params() for t in self.trees]}

    @classmethod
    def from_params(cls, algorithm: str, p: dict) -> "ForestModel":
        return cls(tuple(TreeModel.from_params("dt", t) for t in p["trees"]), algorithm)


def fit_forest(
    X,
    y,
    n_trees: int = 20,
    max_depth: int = 6,
    min_leaf: int = 2,
    rng: Rng | None = None,
    bootstrap: bool = True,
    max_features: int | str | None = "half",
) -> ForestModel:
    """Bagged trees; ``max_features="half"`` draws ceil(p/2) features per split."""
    if n_trees < 1:
        raise ConfigError("n_trees must be >= 1")
    X, y = check_xy(X, y)
    n, p = X.shape
    rng = rng if rng is not None else Rng(0)
    if max_features == "half":
        max_features = max(1, math.ceil(p / 2))
    trees = []
    for _ in range(n_trees):
        tree_rng = Rng(rng.next_u64())
        if bootstrap:
            idx = np.array([tree_rng.below(n) for _ in range(n)], dtype=np.int64)
        else:
            idx = np.arange(n)
        trees.append(
            fit_tree(X[idx], y[idx], max_depth, min_leaf, max_features=max_features, rng=tree_rng)
        )
    return ForestModel(tuple(trees))
