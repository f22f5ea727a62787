"""Evaluation metrics: per-class F1, macro/weighted F1, accuracy, Hamming
loss, the majority baseline, and multi-seed aggregation.

Metric functions return fractions in [0, 1]; MetricsRow and the report
layer hold percentages.  F1 uses TP / (TP + (FP + FN)/2) with 0/0 defined
as 0; macro F1 averages over every class in the label universe, including
classes with zero support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class LabelMatrix:
    """N items x L labels binary matrix with its label universe."""

    rows: np.ndarray
    label_universe: tuple[str, ...]

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.int8)
        if rows.ndim != 2 or rows.shape[1] != len(self.label_universe):
            raise ValueError("rows must be N x L with L = len(label_universe)")
        if rows.size and not np.isin(rows, (0, 1)).all():
            raise ValueError("matrix entries must be 0 or 1")
        object.__setattr__(self, "rows", rows)

    @staticmethod
    def from_label_sets(
        label_sets: Sequence[Iterable[str]], label_universe: Sequence[str]
    ) -> "LabelMatrix":
        universe = tuple(label_universe)
        index = {lab: j for j, lab in enumerate(universe)}
        rows = np.zeros((len(label_sets), len(universe)), dtype=np.int8)
        for i, labels in enumerate(label_sets):
            for lab in labels:
                if lab not in index:
                    raise ValueError(f"label {lab!r} outside the task universe")
                rows[i, index[lab]] = 1
        return LabelMatrix(rows, universe)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows.shape


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-class TP/FP/FN and true-support tallies."""

    label_universe: tuple[str, ...]
    tp: tuple[int, ...]
    fp: tuple[int, ...]
    fn: tuple[int, ...]

    def __post_init__(self) -> None:
        n = len(self.label_universe)
        if not (len(self.tp) == len(self.fp) == len(self.fn) == n):
            raise ValueError("count tuples must match the label universe")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(t + f for t, f in zip(self.tp, self.fn))

    @property
    def n_classes(self) -> int:
        return len(self.label_universe)


class F1Scores(NamedTuple):
    per_class: tuple[float, ...]
    macro: float
    weighted: float


def confusion_counts(truth: LabelMatrix, pred: LabelMatrix) -> ConfusionCounts:
    """Per-label binary TP/FP/FN between two label matrices."""
    if truth.label_universe != pred.label_universe:
        raise ValueError("label universes differ")
    if truth.shape != pred.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {pred.shape}")
    t, p = truth.rows, pred.rows
    tp = ((t == 1) & (p == 1)).sum(axis=0)
    fp = ((t == 0) & (p == 1)).sum(axis=0)
    fn = ((t == 1) & (p == 0)).sum(axis=0)
    return ConfusionCounts(
        truth.label_universe,
        tuple(int(x) for x in tp),
        tuple(int(x) for x in fp),
        tuple(int(x) for x in fn),
    )


def f1_scores(
    counts: ConfusionCounts,
    weight_source: str = "eval",
    train_support: Sequence[int] | None = None,
) -> F1Scores:
    """Per-class F1 plus macro and weighted averages.

    F1_i = TP_i / (TP_i + (FP_i + FN_i)/2), 0/0 -> 0.  Macro F1 averages all
    classes with equal weight.  Weighted F1 weights by class support, taken
    from the evaluation set by default or from supplied training supports
    when weight_source='train'.
    """
    per_class = []
    for tp, fp, fn in zip(counts.tp, counts.fp, counts.fn):
        denom = tp + 0.5 * (fp + fn)
        per_class.append(tp / denom if denom > 0 else 0.0)

    macro = sum(per_class) / counts.n_classes

    if weight_source == "eval":
        weights = counts.support
    elif weight_source == "train":
        if train_support is None:
            raise ValueError("weight_source='train' requires train_support")
        if len(train_support) != counts.n_classes:
            raise ValueError("train_support length must match the label universe")
        weights = tuple(train_support)
    else:
        raise ValueError(f"unknown weight_source {weight_source!r}")

    total = sum(weights)
    if total > 0:
        weighted = sum(w * f for w, f in zip(weights, per_class)) / total
    else:
        weighted = 0.0
    return F1Scores(tuple(per_class), macro, weighted)


def accuracy(truth: Sequence, pred: Sequence) -> float:
    """Exact-match fraction for single-label sequences."""
    if len(truth) != len(pred):
        raise ValueError(f"length mismatch: {len(truth)} vs {len(pred)}")
    if not truth:
        raise ValueError("cannot score an empty sequence")
    return sum(1 for t, p in zip(truth, pred) if t == p) / len(truth)


def hamming_loss(truth: LabelMatrix, pred: LabelMatrix) -> float:
    """Fraction of label cells where prediction and truth disagree."""
    if truth.label_universe != pred.label_universe:
        raise ValueError("label universes differ")
    if truth.shape != pred.shape:
        raise ValueError(f"shape mismatch: {truth.shape} vs {pred.shape}")
    n, l = truth.shape
    if n * l == 0:
        raise ValueError("cannot score an empty matrix")
    return float(np.not_equal(truth.rows, pred.rows).mean())


@dataclass(frozen=True)
class MajorityBaseline:
    """Constant predictor emitting the dominant training label."""

    label: str

    def predict(self, n: int) -> list[frozenset[str]]:
        return [frozenset({self.label})] * n


def majority_baseline(train_labels: Iterable[Iterable[str] | str]) -> MajorityBaseline:
    """Most frequent training label; ties go to the lexicographically
    smallest.  Multilabel items contribute each of their labels once."""
    counts: dict[str, int] = {}
    for labels in train_labels:
        if isinstance(labels, str):
            labels = (labels,)
        for lab in labels:
            counts[lab] = counts.get(lab, 0) + 1
    if not counts:
        raise ValueError("cannot build a baseline from empty training labels")
    winner = min(counts, key=lambda lab: (-counts[lab], lab))
    return MajorityBaseline(winner)


@dataclass(frozen=True)
class MetricsRow:
    """One report line: percentages for W-F1, M-F1, and ACC or HL."""

    task: str
    model: str
    seed: int | None
    w_f1: float
    m_f1: float
    acc: float | None = None
    hl: float | None = None

    def __post_init__(self) -> None:
        if (self.acc is None) == (self.hl is None):
            raise ValueError("exactly one of acc/hl must be set")
        for value in (self.w_f1, self.m_f1, self.third_metric):
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"metric {value} outside [0, 100]")

    @property
    def third_metric(self) -> float:
        return self.acc if self.acc is not None else self.hl  # type: ignore[return-value]

    @property
    def third_kind(self) -> str:
        return "acc" if self.acc is not None else "hl"


@dataclass(frozen=True)
class AggregateRow:
    """Mean and sample std (n-1) over runs, rounded to 2 decimals."""

    task: str
    model: str
    n_runs: int
    w_f1: float
    w_f1_std: float
    m_f1: float
    m_f1_std: float
    third_metric: float
    third_metric_std: float
    third_kind: str


def round2(value: float) -> float:
    """Round half-up to 2 decimals (table formatting convention)."""
    return float(Decimal(str(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate_runs(rows: Sequence[MetricsRow]) -> AggregateRow:
    """Aggregate per-seed rows of one (task, model) into mean +/- std."""
    if not rows:
        raise ValueError("cannot aggregate an empty row list")
    first = rows[0]
    for row in rows:
        if (row.task, row.model) != (first.task, first.model):
            raise ValueError(
                f"heterogeneous rows: ({row.task}, {row.model}) vs "
                f"({first.task}, {first.model})"
            )
        if row.third_kind != first.third_kind:
            raise ValueError("rows mix ACC and HL metrics")

    w_mean, w_std = _mean_std([r.w_f1 for r in rows])
    m_mean, m_std = _mean_std([r.m_f1 for r in rows])
    t_mean, t_std = _mean_std([r.third_metric for r in rows])
    return AggregateRow(
        first.task,
        first.model,
        len(rows),
        round2(w_mean),
        round2(w_std),
        round2(m_mean),
        round2(m_std),
        round2(t_mean),
        round2(t_std),
        first.third_kind,
    )
