"""Discrete multiclass AdaBoost (SAMME) over naive-Bayes base learners."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from uttlabel.learners.base import as_csr, check_dimension, encode_labels, register_model
from uttlabel.learners.naive_bayes import NBModel, train_naive_bayes


@register_model
@dataclass(frozen=True, eq=False)
class BoostEnsemble:
    kind = "adaboost_nb"

    classes: tuple
    weak_models: tuple[NBModel, ...]
    alphas: tuple[float, ...]
    learning_rate: float
    max_estimators: int

    def __post_init__(self) -> None:
        if len(self.weak_models) != len(self.alphas):
            raise ValueError("one alpha per weak model required")
        if len(self.weak_models) > self.max_estimators:
            raise ValueError("more weak models than max_estimators")

    @property
    def dimension(self) -> int:
        return self.weak_models[0].dimension

    def decision_scores(self, X) -> np.ndarray:
        """Alpha-weighted vote counts per class."""
        X = as_csr(X, dimension=self.dimension)
        check_dimension(X, self.dimension)
        n, k = X.shape[0], len(self.classes)
        votes = np.zeros((n, k), dtype=np.float64)
        for model, alpha in zip(self.weak_models, self.alphas):
            picks = np.argmax(model.decision_scores(X), axis=1)
            votes[np.arange(n), picks] += alpha
        return votes

    def to_state(self) -> dict:
        return {
            "classes": list(self.classes),
            "alphas": list(self.alphas),
            "learning_rate": self.learning_rate,
            "max_estimators": self.max_estimators,
            "weak_models": [m.to_state() for m in self.weak_models],
        }

    @staticmethod
    def from_state(state: dict) -> "BoostEnsemble":
        return BoostEnsemble(
            tuple(state["classes"]),
            tuple(NBModel.from_state(s) for s in state["weak_models"]),
            tuple(float(a) for a in state["alphas"]),
            float(state["learning_rate"]),
            int(state["max_estimators"]),
        )


def train_adaboost_nb(
    X,
    y: Sequence,
    n_estimators: int = 50,
    learning_rate: float = 0.1,
    alpha: float = 1.0,
    classes: Sequence | None = None,
    weight_log: list | None = None,
) -> BoostEnsemble:
    """SAMME boosting of smoothed NB.

    Per round: fit NB on the current weights, compute weighted error eps,
    stop on eps = 0 (keep the perfect model with weight 1.0) or
    eps >= 1 - 1/K (discard the round); otherwise weight the model by
    learning_rate * (ln((1-eps)/eps) + ln(K-1)), upweight misclassified
    samples by exp(model weight), renormalize.  A first round that is
    already worse than chance keeps its model with weight 1.0 so the
    ensemble is never empty.

    When weight_log is a list, a copy of the sample-weight distribution is
    appended after every completed round's renormalization.
    """
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    X = as_csr(X)
    y_idx, classes = encode_labels(y, classes)
    if X.shape[0] != len(y_idx):
        raise ValueError(f"X has {X.shape[0]} rows but y has {len(y_idx)} labels")

    n = X.shape[0]
    k = len(classes)
    weights = np.full(n, 1.0 / n, dtype=np.float64)
    kept_models: list[NBModel] = []
    kept_alphas: list[float] = []

    labels = [classes[i] for i in y_idx]
    for _ in range(n_estimators):
        # Fit on the weighted sample at effective-count scale (mean weight 1);
        # handing the sum-1 distribution straight to NB would let the
        # smoothing constant swamp the weighted counts entirely.
        model = train_naive_bayes(X, labels, alpha, classes, weights * n)
        picks = np.argmax(model.decision_scores(X), axis=1)
        miss = picks != y_idx
        eps = float(weights[miss].sum())

        if eps <= 0.0:
            kept_models.append(model)
            kept_alphas.append(1.0)
            break
        if eps >= 1.0 - 1.0 / k:
            if not kept_models:
                kept_models.append(model)
                kept_alphas.append(1.0)
            break

        model_weight = learning_rate * (math.log((1.0 - eps) / eps) + math.log(k - 1))
        if model_weight <= 0.0:
            break
        kept_models.append(model)
        kept_alphas.append(model_weight)
        weights[miss] *= math.exp(model_weight)
        weights /= weights.sum()
        if weight_log is not None:
            weight_log.append(weights.copy())

    return BoostEnsemble(
        classes, tuple(kept_models), tuple(kept_alphas), float(learning_rate), n_estimators
    )
