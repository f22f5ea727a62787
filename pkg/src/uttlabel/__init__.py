"""Utterance labeling pipeline for conversation transcripts.

Ingests speaker-turn transcripts, derives five classification tasks from a
hierarchical label taxonomy (binary emotion/cognition, two eight-class coarse
tasks, two fine-grained tasks), featurizes context windows with TF-IDF, trains
five classical learners (optionally inside classifier chains for multilabel
tasks), and scores everything with macro/weighted F1, accuracy, and Hamming
loss.
"""

__version__ = "0.1.0"

from uttlabel.corpus import (
    Corpus,
    SplitPair,
    TaskDataset,
    Taxonomy,
    Utterance,
    build_context_window,
    derive_task,
    parse_transcripts,
    stratified_split,
)
from uttlabel.features import (
    SparseVector,
    Vocabulary,
    fit_tfidf,
    normalize_tokens,
    transform_tfidf,
)
from uttlabel.metrics import (
    ConfusionCounts,
    LabelMatrix,
    MetricsRow,
    accuracy,
    aggregate_runs,
    confusion_counts,
    f1_scores,
    hamming_loss,
    majority_baseline,
)

__all__ = [
    "Corpus",
    "SplitPair",
    "TaskDataset",
    "Taxonomy",
    "Utterance",
    "build_context_window",
    "derive_task",
    "parse_transcripts",
    "stratified_split",
    "SparseVector",
    "Vocabulary",
    "fit_tfidf",
    "normalize_tokens",
    "transform_tfidf",
    "ConfusionCounts",
    "LabelMatrix",
    "MetricsRow",
    "accuracy",
    "aggregate_runs",
    "confusion_counts",
    "f1_scores",
    "hamming_loss",
    "majority_baseline",
    "__version__",
]
