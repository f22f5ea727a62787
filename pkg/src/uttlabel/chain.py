"""Classifier chains: one binary link per label over any base learner.

Link j is trained on the original features plus the TRUE indicators of the
j earlier labels in chain order (teacher forcing); at prediction time the
links run in order and consume the PREDICTED indicators instead.  The
default order is descending training frequency, ties lexicographic.  With a
single label the chain degenerates to exactly the unwrapped base learner.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from uttlabel.learners import train_learner
from uttlabel.learners.base import MODEL_REGISTRY, as_csr, predict, register_model
from uttlabel.metrics import LabelMatrix
from uttlabel.seeding import stable_seed

BASE_LEARNERS = ("nb", "adaboost_nb", "rf", "gd_svm", "logreg")


def train_binary(spec: dict, X, y01: Sequence[int], seed: int):
    """Train one binary link from base_spec; classes are always (0, 1)."""
    return train_learner(spec, X, y01, (0, 1), seed)


def default_chain_order(Y: LabelMatrix) -> tuple[str, ...]:
    """Labels by descending training frequency, ties lexicographic."""
    counts = dict(zip(Y.label_universe, (int(c) for c in Y.rows.sum(axis=0))))
    return tuple(sorted(Y.label_universe, key=lambda lab: (-counts[lab], lab)))


@register_model
@dataclass(frozen=True, eq=False)
class ChainModel:
    kind = "chain"

    label_universe: tuple[str, ...]
    order: tuple[str, ...]
    links: tuple
    base_spec: dict
    base_dim: int

    def __post_init__(self) -> None:
        if sorted(self.order) != sorted(self.label_universe):
            raise ValueError("order must be a permutation of the label universe")
        if len(self.links) != len(self.order):
            raise ValueError("one link per label required")

    @property
    def dimension(self) -> int:
        return self.base_dim

    def predict_matrix(self, X) -> LabelMatrix:
        return predict_chain(self, X)

    def to_state(self) -> dict:
        return {
            "label_universe": list(self.label_universe),
            "order": list(self.order),
            "base_spec": self.base_spec,
            "base_dim": self.base_dim,
            "links": [{"kind": m.kind, "state": m.to_state()} for m in self.links],
        }

    @staticmethod
    def from_state(state: dict) -> "ChainModel":
        links = tuple(
            MODEL_REGISTRY[entry["kind"]].from_state(entry["state"])
            for entry in state["links"]
        )
        return ChainModel(
            tuple(state["label_universe"]),
            tuple(state["order"]),
            links,
            dict(state["base_spec"]),
            int(state["base_dim"]),
        )


def _append_column(X: sparse.csr_matrix, column: np.ndarray) -> sparse.csr_matrix:
    col = sparse.csr_matrix(column.reshape(-1, 1).astype(np.float64))
    out = sparse.hstack([X, col], format="csr")
    out.sort_indices()
    return out


def fit_chain(
    base_spec: dict,
    X,
    Y: LabelMatrix,
    order: Sequence[str] | None = None,
    seed: int = 0,
) -> ChainModel:
    """Fit one binary link per label with teacher forcing.

    Link j sees the original d features plus j columns holding the TRUE
    indicators of the earlier labels in chain order.
    """
    X = as_csr(X)
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if order is None:
        order = default_chain_order(Y)
    order = tuple(order)
    if sorted(order) != sorted(Y.label_universe):
        raise ValueError("order must be a permutation of the label universe")

    col_of = {lab: j for j, lab in enumerate(Y.label_universe)}
    links = []
    augmented = X
    for j, lab in enumerate(order):
        y01 = Y.rows[:, col_of[lab]].astype(np.int64)
        link = train_binary(base_spec, augmented, list(y01), stable_seed(seed, f"link:{j}"))
        links.append(link)
        if j + 1 < len(order):
            augmented = _append_column(augmented, Y.rows[:, col_of[lab]])

    return ChainModel(Y.label_universe, order, tuple(links), dict(base_spec), X.shape[1])


def predict_chain(chain: ChainModel, X) -> LabelMatrix:
    """Evaluate links in chain order on predicted earlier-label indicators."""
    X = as_csr(X, dimension=chain.base_dim)
    if X.shape[1] != chain.base_dim:
        raise ValueError(
            f"feature dimension mismatch: got {X.shape[1]}, chain has {chain.base_dim}"
        )
    n = X.shape[0]
    out = np.zeros((n, len(chain.label_universe)), dtype=np.int8)
    if n == 0:
        return LabelMatrix(out, chain.label_universe)

    col_of = {lab: j for j, lab in enumerate(chain.label_universe)}
    augmented = X
    for j, (lab, link) in enumerate(zip(chain.order, chain.links)):
        picks, _ = predict(link, augmented)
        column = np.asarray(picks, dtype=np.int8)
        out[:, col_of[lab]] = column
        if j + 1 < len(chain.links):
            augmented = _append_column(augmented, column)

    return LabelMatrix(out, chain.label_universe)
