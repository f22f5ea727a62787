"""Random forest with Gini splits, grown by the kernel backends.

Each tree draws its bootstrap sample and per-node feature subsets from a
SplitMix64 stream seeded by (forest seed, tree index), so forests are
reproducible bit-for-bit across backends and independent of training
parallelism.  Prediction is majority vote over per-tree leaf votes, ties
toward the lowest class index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from uttlabel import _kernels
from uttlabel.learners.base import as_csr, check_dimension, encode_labels, register_model
from uttlabel.seeding import tree_seed


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat node arrays: feature < 0 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_votes(self, dense_rows: np.ndarray) -> np.ndarray:
        """Per-row winning class index at the reached leaf."""
        n = dense_rows.shape[0]
        pos = np.zeros(n, dtype=np.int64)
        active = self.feature[pos] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            node = pos[idx]
            vals = dense_rows[idx, self.feature[node]]
            goes_left = vals <= self.threshold[node]
            pos[idx] = np.where(goes_left, self.left[node], self.right[node])
            active = self.feature[pos] >= 0
        return np.argmax(self.counts[pos], axis=1).astype(np.int64)


@register_model
@dataclass(frozen=True, eq=False)
class Forest:
    kind = "rf"

    classes: tuple
    trees: tuple[Tree, ...]
    n_features: int
    features_per_split: int
    seed: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def dimension(self) -> int:
        return self.n_features

    def decision_scores(self, X) -> np.ndarray:
        """Vote counts per class; each row sums to n_trees."""
        X = as_csr(X, dimension=self.dimension)
        check_dimension(X, self.dimension)
        n, k = X.shape[0], len(self.classes)
        votes = np.zeros((n, k), dtype=np.float64)
        # densify in blocks to bound memory on wide vocabularies
        block = max(1, min(n, 4096))
        for start in range(0, n, block):
            rows = X[start : start + block].toarray().astype(np.float64)
            for tree in self.trees:
                picks = tree.leaf_votes(rows)
                votes[start + np.arange(rows.shape[0]), picks] += 1.0
        return votes

    def to_state(self) -> dict:
        return {
            "classes": list(self.classes),
            "n_features": self.n_features,
            "features_per_split": self.features_per_split,
            "seed": self.seed,
            "trees": [
                {
                    "feature": t.feature,
                    "threshold": t.threshold,
                    "left": t.left,
                    "right": t.right,
                    "counts": t.counts,
                }
                for t in self.trees
            ],
        }

    @staticmethod
    def from_state(state: dict) -> "Forest":
        trees = tuple(
            Tree(
                np.asarray(s["feature"], dtype=np.int32),
                np.asarray(s["threshold"], dtype=np.float64),
                np.asarray(s["left"], dtype=np.int32),
                np.asarray(s["right"], dtype=np.int32),
                np.asarray(s["counts"], dtype=np.int64),
            )
            for s in state["trees"]
        )
        return Forest(
            tuple(state["classes"]),
            trees,
            int(state["n_features"]),
            int(state["features_per_split"]),
            int(state["seed"]),
        )


def train_random_forest(
    X,
    y: Sequence,
    n_trees: int = 100,
    seed: int = 0,
    classes: Sequence | None = None,
    features_per_split: int | None = None,
    bootstrap: bool = True,
) -> Forest:
    """Grow n_trees Gini trees on bootstrap samples.

    features_per_split defaults to ceil(sqrt(d)); trees grow until pure or
    below two samples.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X = as_csr(X)
    y_idx, classes = encode_labels(y, classes)
    if X.shape[0] != len(y_idx):
        raise ValueError(f"X has {X.shape[0]} rows but y has {len(y_idx)} labels")

    n, d = X.shape
    if features_per_split is None:
        features_per_split = max(1, math.isqrt(d) + (math.isqrt(d) ** 2 < d))
    kernel = _kernels.active()

    csc = X.tocsc()
    if not csc.has_sorted_indices:
        csc.sort_indices()
    data = np.asarray(csc.data, dtype=np.float64)
    indices = np.asarray(csc.indices, dtype=np.int32)
    indptr = np.asarray(csc.indptr, dtype=np.int32)

    trees = []
    for t in range(n_trees):
        feature, threshold, left, right, counts = kernel.build_tree(
            data,
            indices,
            indptr,
            n,
            d,
            y_idx,
            len(classes),
            tree_seed(seed, t),
            features_per_split,
            bootstrap,
        )
        trees.append(Tree(feature, threshold, left, right, counts))

    return Forest(classes, tuple(trees), d, int(features_per_split), int(seed))
