"""Multinomial naive Bayes over TF-IDF weights.

Feature values act as (fractional) counts.  Additive smoothing applies to
the per-class feature totals only; priors come from (weighted) class
frequencies.  Sample weights make the learner usable inside boosting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from uttlabel.learners.base import (
    as_csr,
    check_dimension,
    encode_labels,
    register_model,
)


@register_model
@dataclass(frozen=True, eq=False)
class NBModel:
    kind = "nb"

    classes: tuple
    class_log_prior: np.ndarray
    feature_log_prob: np.ndarray
    alpha: float

    @property
    def dimension(self) -> int:
        return self.feature_log_prob.shape[1]

    def decision_scores(self, X) -> np.ndarray:
        X = as_csr(X, dimension=self.dimension)
        check_dimension(X, self.dimension)
        return X @ self.feature_log_prob.T + self.class_log_prior

    def to_state(self) -> dict:
        return {
            "classes": list(self.classes),
            "class_log_prior": self.class_log_prior,
            "feature_log_prob": self.feature_log_prob,
            "alpha": self.alpha,
        }

    @staticmethod
    def from_state(state: dict) -> "NBModel":
        return NBModel(
            tuple(state["classes"]),
            np.asarray(state["class_log_prior"], dtype=np.float64),
            np.asarray(state["feature_log_prob"], dtype=np.float64),
            float(state["alpha"]),
        )


def train_naive_bayes(
    X,
    y: Sequence,
    alpha: float = 1.0,
    classes: Sequence | None = None,
    sample_weight: np.ndarray | None = None,
) -> NBModel:
    """Fit multinomial NB with additive smoothing.

    likelihood(t|c) = (sum of t-counts in class c + alpha) /
    (sum of all counts in c + alpha * V).
    """
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    X = as_csr(X)
    y_idx, classes = encode_labels(y, classes)
    if X.shape[0] != len(y_idx):
        raise ValueError(f"X has {X.shape[0]} rows but y has {len(y_idx)} labels")

    n, d = X.shape
    k = len(classes)
    if sample_weight is None:
        weights = np.ones(n, dtype=np.float64)
    else:
        weights = np.asarray(sample_weight, dtype=np.float64)
        if weights.shape != (n,):
            raise ValueError("sample_weight length must match X rows")
        if (weights < 0).any() or weights.sum() <= 0:
            raise ValueError("sample_weight must be non-negative with positive sum")

    feature_counts = np.zeros((k, d), dtype=np.float64)
    class_weight = np.zeros(k, dtype=np.float64)
    for c in range(k):
        mask = weights * (y_idx == c)
        class_weight[c] = mask.sum()
        feature_counts[c] = X.T @ mask

    smoothed = feature_counts + alpha
    feature_log_prob = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    with np.errstate(divide="ignore"):
        # a class absent from y keeps prior -inf: it can never win argmax
        class_log_prior = np.log(class_weight) - np.log(class_weight.sum())
    return NBModel(classes, class_log_prior, feature_log_prob, float(alpha))
