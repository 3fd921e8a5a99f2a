"""Extremely randomized trees for binary classification.

Every tree sees the whole training sample.  At each node ``k_features``
attributes are drawn among those that are not constant in the node, one
cut-point is drawn uniformly between the node-local min and max of each,
and the split with the largest Gini decrease is kept.  Nodes become leaves
when pure, when smaller than ``n_min`` or when all attributes are constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ._parallel import parallel_map
from .errors import ConfigError, DataError


def _gini(n1, n):
    p = n1 / n
    return 2.0 * p * (1.0 - p)


@dataclass
class Tree:
    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)  # share of class 1 at the node

    def _add(self, value):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(value)
        return len(self.value) - 1

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(len(X))
        for r, x in enumerate(X):
            node = 0
            while self.feature[node] >= 0:
                node = self.left[node] if x[self.feature[node]] < self.threshold[node] else self.right[node]
            out[r] = self.value[node]
        return out

    @property
    def n_nodes(self) -> int:
        return len(self.value)


def build_tree(X: np.ndarray, y: np.ndarray, k_features: int, n_min: int, seed) -> tuple[Tree, np.ndarray]:
    """Grow one tree; returns it with its raw per-feature Gini decrease."""
    rng = np.random.default_rng(seed)
    p = X.shape[1]
    tree = Tree()
    importance = np.zeros(p)
    root = tree._add(float(y.mean()))
    stack = [(root, np.arange(len(y)))]
    while stack:
        node, idx = stack.pop()
        n = idx.size
        n1 = int(y[idx].sum())
        if n < n_min or n1 == 0 or n1 == n:
            continue
        sub = X[idx]
        lo = sub.min(axis=0)
        hi = sub.max(axis=0)
        usable = np.flatnonzero(hi > lo)
        if usable.size == 0:
            continue
        chosen = rng.choice(usable, size=min(k_features, usable.size), replace=False)
        parent = n * _gini(n1, n)
        best = None
        for f in chosen:
            cut = rng.uniform(lo[f], hi[f])
            go_left = sub[:, f] < cut
            nl = int(go_left.sum())
            if nl == 0 or nl == n:
                continue
            l1 = int(y[idx][go_left].sum())
            gain = parent - nl * _gini(l1, nl) - (n - nl) * _gini(n1 - l1, n - nl)
            if best is None or gain > best[0]:
                best = (gain, int(f), float(cut), go_left)
        if best is None:
            continue
        gain, f, cut, go_left = best
        importance[f] += gain
        li, ri = idx[go_left], idx[~go_left]
        left = tree._add(float(y[li].mean()))
        right = tree._add(float(y[ri].mean()))
        tree.feature[node], tree.threshold[node] = f, cut
        tree.left[node], tree.right[node] = left, right
        # Right pushed first so the left subtree is grown first.
        stack.append((right, ri))
        stack.append((left, li))
    return tree, importance


@dataclass
class ExtraTreesModel:
    trees: list[Tree]
    feature_importances: np.ndarray
    n_features: int
    hyperparameters: dict
    kind: str = "extratrees"
    binary: bool = True

    def votes(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.stack([t.predict_proba(X) for t in self.trees])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority vote of tree classes; exact ties go to the mean leaf share."""
        probs = self.votes(X)
        ones = (probs > 0.5).sum(axis=0)
        half = len(self.trees) / 2.0
        tie = ones == half
        return np.where(tie, probs.mean(axis=0) > 0.5, ones > half).astype(np.int64)


def _normalized(v: np.ndarray) -> np.ndarray:
    s = v.sum()
    return v / s if s > 0 else np.zeros_like(v)


def train_extra_trees(
    table,
    n_trees: int = 100,
    k_features: int | None = None,
    n_min: int = 2,
    seed: int = 0,
    workers: int | None = None,
) -> ExtraTreesModel:
    X = np.asarray(table.X, dtype=float)
    y = np.asarray(table.labels, dtype=np.int64)
    if len(y) < 2:
        raise DataError("need at least 2 training rows")
    if len(np.unique(y)) < 2:
        raise DataError("single-class target: both classes are needed for training")
    p = X.shape[1]
    if k_features is None:
        k_features = math.ceil(math.sqrt(p))
    if not 1 <= k_features <= p:
        raise ConfigError(f"k_features must lie in [1, {p}]")
    if n_trees < 1 or n_min < 2:
        raise ConfigError("need n_trees >= 1 and n_min >= 2")
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    grown = parallel_map(partial(_grow, X=X, y=y, k=k_features, n_min=n_min), seeds, workers)
    per_tree = np.array([_normalized(imp) for _, imp in grown])
    importances = per_tree.mean(axis=0)
    importances = importances / importances.sum() if importances.sum() > 0 else np.full(p, 1.0 / p)
    return ExtraTreesModel(
        trees=[t for t, _ in grown],
        feature_importances=importances,
        n_features=p,
        hyperparameters={"n_trees": n_trees, "k_features": k_features, "n_min": n_min, "seed": seed},
    )


def _grow(seed, X, y, k, n_min):
    return build_tree(X, y, k, n_min, seed)
