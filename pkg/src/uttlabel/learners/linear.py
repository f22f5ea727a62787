"""Linear models: SGD-trained hinge-loss SVM and L2 logistic regression.

The SVM follows the per-sample subgradient scheme with learning rate
eta_t = 1/(lambda*(t0+t)); t0 comes from the standard heuristic
t0 = 1/(lambda*eta0) with eta0 = sqrt(1/sqrt(lambda)), so lambda=1e-4 gives
t0=1000 and an initial rate of 10.  Multiclass is one-vs-rest; a binary
problem trains a single model whose sign decides the class.

Logistic regression minimizes mean softmax negative log-likelihood plus
(lambda/2)*||W||^2 (bias unregularized) by full-batch gradient descent with
Armijo backtracking, stopping at gradient norm <= tol or the iteration cap.
Both models are deterministic given their inputs (and seed, for the SVM).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from uttlabel import _kernels
from uttlabel.learners.base import as_csr, check_dimension, encode_labels, register_model
from uttlabel.seeding import stable_seed

KIND_HINGE = "HINGE-SGD"
KIND_LOGISTIC = "LOGISTIC"


@register_model
@dataclass(frozen=True, eq=False)
class LinearModel:
    kind = "linear"

    classes: tuple
    model_kind: str
    weights: np.ndarray
    bias: np.ndarray
    regularization: float
    converged: bool = True
    n_iter: int = 0

    def __post_init__(self) -> None:
        if self.model_kind not in (KIND_HINGE, KIND_LOGISTIC):
            raise ValueError(f"unknown linear model kind {self.model_kind!r}")
        if self.weights.ndim != 2 or len(self.bias) != self.weights.shape[0]:
            raise ValueError("weights must be (n_models, d) with one bias per row")

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]

    def decision_scores(self, X) -> np.ndarray:
        """Margins (hinge) or logits (logistic), one column per class.

        A single binary hinge model reports (-s, s) so the argmax contract
        holds: s > 0 picks classes[1], s <= 0 picks classes[0].
        """
        X = as_csr(X, dimension=self.dimension)
        check_dimension(X, self.dimension)
        raw = X @ self.weights.T + self.bias
        if self.model_kind == KIND_HINGE and self.weights.shape[0] == 1 and len(self.classes) == 2:
            s = raw[:, 0]
            return np.column_stack([-s, s])
        return raw

    def to_state(self) -> dict:
        return {
            "classes": list(self.classes),
            "model_kind": self.model_kind,
            "weights": self.weights,
            "bias": self.bias,
            "regularization": self.regularization,
            "converged": self.converged,
            "n_iter": self.n_iter,
        }

    @staticmethod
    def from_state(state: dict) -> "LinearModel":
        return LinearModel(
            tuple(state["classes"]),
            str(state["model_kind"]),
            np.asarray(state["weights"], dtype=np.float64),
            np.asarray(state["bias"], dtype=np.float64),
            float(state["regularization"]),
            bool(state["converged"]),
            int(state["n_iter"]),
        )


def sgd_t0(lam: float) -> float:
    """t0 of the 'optimal' schedule: 1/(lam*eta0), eta0 = sqrt(1/sqrt(lam))."""
    eta0 = np.sqrt(1.0 / np.sqrt(lam))
    return 1.0 / (lam * eta0)


def _csr_parts(X: sparse.csr_matrix):
    return (
        np.asarray(X.data, dtype=np.float64),
        np.asarray(X.indices, dtype=np.int32),
        np.asarray(X.indptr, dtype=np.int32),
    )


def train_sgd_svm(
    X,
    y: Sequence,
    epochs: int = 1000,
    lam: float = 1e-4,
    seed: int = 0,
    classes: Sequence | None = None,
) -> LinearModel:
    """Hinge-loss SGD, one-vs-rest for K > 2, single model for K = 2."""
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    X = as_csr(X)
    y_idx, classes = encode_labels(y, classes)
    if X.shape[0] != len(y_idx):
        raise ValueError(f"X has {X.shape[0]} rows but y has {len(y_idx)} labels")

    kernel = _kernels.active()
    data, indices, indptr = _csr_parts(X)
    n, d = X.shape
    t0 = sgd_t0(lam)
    k = len(classes)

    if k <= 2:
        # single binary model: +1 for classes[1] (or the only class)
        y_pm = np.where(y_idx == (1 if k == 2 else 0), 1.0, -1.0).astype(np.float64)
        w, b = kernel.sgd_hinge(
            data, indices, indptr, n, d, y_pm, lam, t0, epochs, stable_seed(seed, "svm")
        )
        weights = np.asarray(w, dtype=np.float64).reshape(1, d)
        bias = np.asarray([b], dtype=np.float64)
    else:
        weights = np.zeros((k, d), dtype=np.float64)
        bias = np.zeros(k, dtype=np.float64)
        for c in range(k):
            y_pm = np.where(y_idx == c, 1.0, -1.0).astype(np.float64)
            w, b = kernel.sgd_hinge(
                data, indices, indptr, n, d, y_pm, lam, t0, epochs,
                stable_seed(seed, f"svm:{c}"),
            )
            weights[c] = w
            bias[c] = b

    return LinearModel(classes, KIND_HINGE, weights, bias, float(lam))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def logreg_objective_grad(
    X: sparse.csr_matrix,
    y_onehot: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    lam: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean softmax NLL + (lam/2)||W||^2 and its gradient (bias unpenalized)."""
    n = X.shape[0]
    logits = X @ weights.T + bias
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    nll = -float((y_onehot * log_probs).sum()) / n
    objective = nll + 0.5 * lam * float((weights * weights).sum())

    probs = np.exp(log_probs)
    delta = probs - y_onehot
    grad_w = np.asarray((X.T @ delta).T) / n + lam * weights
    grad_b = delta.sum(axis=0) / n
    return objective, grad_w, grad_b


def train_logreg(
    X,
    y: Sequence,
    lam: float = 1e-4,
    max_iter: int = 100,
    tol: float = 1e-4,
    classes: Sequence | None = None,
    objective_log: list | None = None,
) -> LinearModel:
    """Full-batch gradient descent with Armijo backtracking line search.

    The objective never increases across accepted iterations; training stops
    when the gradient norm reaches tol or after max_iter steps (recorded in
    the converged flag).  When objective_log is a list, the objective value
    is appended at initialization and after every accepted step.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    X = as_csr(X)
    y_idx, classes = encode_labels(y, classes)
    if X.shape[0] != len(y_idx):
        raise ValueError(f"X has {X.shape[0]} rows but y has {len(y_idx)} labels")

    n, d = X.shape
    k = len(classes)
    y_onehot = np.zeros((n, k), dtype=np.float64)
    y_onehot[np.arange(n), y_idx] = 1.0

    weights = np.zeros((k, d), dtype=np.float64)
    bias = np.zeros(k, dtype=np.float64)

    objective, grad_w, grad_b = logreg_objective_grad(X, y_onehot, weights, bias, lam)
    if objective_log is not None:
        objective_log.append(objective)
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        grad_norm_sq = float((grad_w * grad_w).sum() + (grad_b * grad_b).sum())
        if np.sqrt(grad_norm_sq) <= tol:
            converged = True
            n_iter -= 1
            break

        step = 1.0
        accepted = False
        for _ in range(60):
            cand_w = weights - step * grad_w
            cand_b = bias - step * grad_b
            cand_obj, cand_gw, cand_gb = logreg_objective_grad(X, y_onehot, cand_w, cand_b, lam)
            if cand_obj <= objective - 1e-4 * step * grad_norm_sq:
                weights, bias = cand_w, cand_b
                objective, grad_w, grad_b = cand_obj, cand_gw, cand_gb
                if objective_log is not None:
                    objective_log.append(objective)
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise RuntimeError(
                "line search failed: objective increased even at minimal step"
            )
    else:
        converged = bool(
            np.sqrt(float((grad_w * grad_w).sum() + (grad_b * grad_b).sum())) <= tol
        )

    return LinearModel(classes, KIND_LOGISTIC, weights, bias, float(lam), converged, n_iter)
