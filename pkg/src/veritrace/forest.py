"""Decision trees and bootstrap forests grown from scratch.

Split search scans midpoints between consecutive sorted unique values of
each candidate feature and minimizes weighted Gini impurity; ties keep the
first candidate in (feature, threshold) scan order so growth is
deterministic given the node's candidate feature order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


def gini(y: np.ndarray) -> float:
    """Impurity of a binary label vector; 0 when pure, 0.5 at balance."""
    n = y.shape[0]
    if n == 0:
        return 0.0
    p1 = float(np.count_nonzero(y)) / n
    return 1.0 - p1 * p1 - (1.0 - p1) * (1.0 - p1)


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    feature_ids: Sequence[int],
    min_samples_leaf: int = 1,
) -> Optional[tuple[int, float, float]]:
    """(feature, threshold, weighted_gini) minimizing impurity, or None.

    Candidate thresholds are midpoints of consecutive sorted unique values;
    rows with value <= threshold go left.
    """
    n = y.shape[0]
    best: Optional[tuple[int, float, float]] = None
    for f in feature_ids:
        values = X[:, f]
        uniq = np.unique(values)
        if uniq.shape[0] < 2:
            continue
        for lo, hi in zip(uniq[:-1], uniq[1:]):
            thr = (float(lo) + float(hi)) / 2.0
            mask = values <= thr
            n_left = int(np.count_nonzero(mask))
            n_right = n - n_left
            if n_left < min_samples_leaf or n_right < min_samples_leaf:
                continue
            score = (n_left * gini(y[mask]) + n_right * gini(y[~mask])) / n
            if best is None or score < best[2]:
                best = (int(f), thr, score)
    return best


@dataclass
class TreeNode:
    label: int
    frac1: float
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        d: dict = {"label": self.label, "frac1": self.frac1}
        if not self.is_leaf:
            d.update(feature=self.feature, threshold=self.threshold,
                     left=self.left.to_dict(), right=self.right.to_dict())
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        node = cls(label=int(d["label"]), frac1=float(d["frac1"]))
        if "feature" in d:
            node.feature = int(d["feature"])
            node.threshold = float(d["threshold"])
            node.left = cls.from_dict(d["left"])
            node.right = cls.from_dict(d["right"])
        return node


class DecisionTree:
    """Single CART-style tree grown to purity (or the leaf-size floor)."""

    def __init__(self) -> None:
        self.root: Optional[TreeNode] = None
        self.n_features: int = 0

    def fit(
        self,
        X: np.ndarray,
        y: np.ndarray,
        rng: Optional[np.random.Generator] = None,
        max_features: Optional[int] = None,
        min_samples_leaf: int = 1,
    ) -> "DecisionTree":
        if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
            raise ValueError(f"bad training shapes: X {X.shape}, y {y.shape}")
        if max_features is not None and not 1 <= max_features <= X.shape[1]:
            raise ValueError(f"max_features must be in [1, {X.shape[1]}]")
        self.n_features = X.shape[1]
        self.root = self._grow(X, y, rng, max_features, min_samples_leaf)
        return self

    def _grow(
        self,
        X: np.ndarray,
        y: np.ndarray,
        rng: Optional[np.random.Generator],
        max_features: Optional[int],
        min_samples_leaf: int,
    ) -> TreeNode:
        n1 = int(np.count_nonzero(y))
        n = y.shape[0]
        frac1 = n1 / n
        label = 1 if 2 * n1 >= n else 0
        if n1 == 0 or n1 == n or n < 2 * min_samples_leaf:
            return TreeNode(label=label, frac1=frac1)

        if max_features is None or max_features >= self.n_features or rng is None:
            candidates: Sequence[int] = range(self.n_features)
        else:
            candidates = [int(f) for f in rng.choice(self.n_features, size=max_features,
                                                     replace=False)]
        split = best_split(X, y, candidates, min_samples_leaf)
        if split is None and len(candidates) < self.n_features:
            # sampled features were constant on this node; fall back to all
            split = best_split(X, y, range(self.n_features), min_samples_leaf)
        if split is None:
            # duplicate rows with conflicting labels: cannot purify further
            return TreeNode(label=label, frac1=frac1)

        feature, threshold, _ = split
        mask = X[:, feature] <= threshold
        node = TreeNode(label=label, frac1=frac1, feature=feature, threshold=threshold)
        node.left = self._grow(X[mask], y[mask], rng, max_features, min_samples_leaf)
        node.right = self._grow(X[~mask], y[~mask], rng, max_features, min_samples_leaf)
        return node

    def predict(self, x: np.ndarray) -> int:
        if self.root is None:
            raise ValueError("tree is not fitted")
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.label

    def to_dict(self) -> dict:
        if self.root is None:
            raise ValueError("tree is not fitted")
        return {"n_features": self.n_features, "root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        tree = cls()
        tree.n_features = int(d["n_features"])
        tree.root = TreeNode.from_dict(d["root"])
        return tree


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int,
    max_features: Optional[int],
    min_samples_leaf: int,
    seed: int,
) -> tuple[list[DecisionTree], list[int]]:
    """Bootstrap forest; tree i draws its sample and feature subsets from a
    generator seeded seed+i, so any tree can be regrown in isolation."""
    trees: list[DecisionTree] = []
    seeds: list[int] = []
    for i in range(n_trees):
        tree_seed = seed + i
        rng = np.random.default_rng(tree_seed)
        idx = rng.integers(0, X.shape[0], size=X.shape[0])
        tree = DecisionTree().fit(X[idx], y[idx], rng=rng,
                                  max_features=max_features,
                                  min_samples_leaf=min_samples_leaf)
        trees.append(tree)
        seeds.append(tree_seed)
    return trees, seeds


def forest_vote(trees: Sequence[DecisionTree], x: np.ndarray) -> float:
    if not trees:
        raise ValueError("empty forest")
    return sum(t.predict(x) for t in trees) / len(trees)
