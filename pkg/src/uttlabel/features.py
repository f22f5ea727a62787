"""Text normalization and TF-IDF featurization.

Tokens come from lowercasing, whitespace splitting, and stripping
non-alphanumeric characters off token boundaries; stopwords and the window
placeholder/separator tokens are dropped.  Interior punctuation survives
("don't" stays one token), so contractions are not mangled.

The TF-IDF variant is raw term counts times smooth idf, L2-normalized:
idf(t) = ln((1+n)/(1+df(t))) + 1.  The vocabulary keeps the max_vocab terms
of highest document frequency (ties broken lexicographically) in that order,
so a smaller cap always yields a prefix of a larger one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse

from uttlabel.corpus import PAD_TOKEN, SEP_TOKEN

_STOPWORD_FILE = Path(__file__).parent / "data" / "stopwords_en.txt"
_DEFAULT_PLACEHOLDERS = frozenset({PAD_TOKEN.lower(), SEP_TOKEN.lower()})

_stopwords_cache: frozenset[str] | None = None


def default_stopwords() -> frozenset[str]:
    """The bundled English stopword list."""
    global _stopwords_cache
    if _stopwords_cache is None:
        text = _STOPWORD_FILE.read_text(encoding="utf-8")
        _stopwords_cache = frozenset(w for w in text.split() if w)
    return _stopwords_cache


def _strip_boundaries(token: str) -> str:
    start, end = 0, len(token)
    while start < end and not token[start].isalnum():
        start += 1
    while end > start and not token[end - 1].isalnum():
        end -= 1
    return token[start:end]


def normalize_tokens(
    text: str,
    placeholders: frozenset[str] | None = None,
    stopwords: frozenset[str] | None = None,
) -> list[str]:
    """Lowercase, split on whitespace, clean boundaries, drop noise tokens.

    Placeholder tokens are matched before boundary stripping so "[PAD]"
    disappears entirely instead of degrading to "pad".  Order and
    multiplicity of surviving tokens are preserved.
    """
    if placeholders is None:
        placeholders = _DEFAULT_PLACEHOLDERS
    else:
        placeholders = frozenset(p.lower() for p in placeholders)
    if stopwords is None:
        stopwords = default_stopwords()

    out: list[str] = []
    for raw in text.lower().split():
        if raw in placeholders:
            continue
        token = _strip_boundaries(raw)
        if not token or token in stopwords:
            continue
        out.append(token)
    return out


@dataclass(frozen=True)
class Vocabulary:
    """Fitted term table: term -> column index, with per-term idf weights."""

    term_index: dict[str, int]
    idf: tuple[float, ...]
    max_size: int
    n_docs: int

    def __post_init__(self) -> None:
        if len(self.idf) != len(self.term_index):
            raise ValueError("idf length must match vocabulary size")

    def __len__(self) -> int:
        return len(self.term_index)

    @property
    def terms(self) -> tuple[str, ...]:
        ordered = [""] * len(self.term_index)
        for term, idx in self.term_index.items():
            ordered[idx] = term
        return tuple(ordered)


@dataclass(frozen=True)
class SparseVector:
    """Sparse nonzero weights over a fixed dimension."""

    entries: dict[int, float]
    dimension: int

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.entries.values()))


def fit_tfidf(train_docs: Sequence[Sequence[str]], max_vocab: int = 3034) -> Vocabulary:
    """Fit a vocabulary on training documents only.

    Keeps up to max_vocab terms by descending document frequency, ties
    lexicographic; idf(t) = ln((1+n)/(1+df(t))) + 1.
    """
    if max_vocab < 1:
        raise ValueError("max_vocab must be a positive integer")
    n = len(train_docs)
    df: dict[str, int] = {}
    for doc in train_docs:
        for term in set(doc):
            df[term] = df.get(term, 0) + 1
    if not df:
        raise ValueError("cannot fit TF-IDF on an empty or all-empty corpus")

    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:max_vocab]
    term_index = {term: i for i, (term, _) in enumerate(ranked)}
    idf = tuple(math.log((1 + n) / (1 + d)) + 1.0 for _, d in ranked)
    return Vocabulary(term_index, idf, max_vocab, n)


def transform_tfidf(vocab: Vocabulary, doc: Sequence[str]) -> SparseVector:
    """Count in-vocabulary terms, weight by idf, L2-normalize.

    Out-of-vocabulary terms are ignored; a doc with no in-vocab terms maps
    to the zero vector (dimension preserved, not normalized).
    """
    counts: dict[int, int] = {}
    for term in doc:
        idx = vocab.term_index.get(term)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    entries = {idx: c * vocab.idf[idx] for idx, c in counts.items()}
    norm = math.sqrt(sum(w * w for w in entries.values()))
    if norm > 0.0:
        entries = {idx: w / norm for idx, w in entries.items()}
    return SparseVector(entries, len(vocab))


def vectors_to_csr(vectors: Sequence[SparseVector], dimension: int | None = None) -> sparse.csr_matrix:
    """Stack SparseVectors into a scipy CSR matrix (float64, int32 indices)."""
    if dimension is None:
        if not vectors:
            raise ValueError("dimension required for an empty vector list")
        dimension = vectors[0].dimension
    indptr = np.zeros(len(vectors) + 1, dtype=np.int32)
    cols: list[int] = []
    vals: list[float] = []
    for i, vec in enumerate(vectors):
        if vec.dimension != dimension:
            raise ValueError("inconsistent vector dimensions")
        for idx in sorted(vec.entries):
            cols.append(idx)
            vals.append(vec.entries[idx])
        indptr[i + 1] = len(cols)
    data = np.asarray(vals, dtype=np.float64)
    indices = np.asarray(cols, dtype=np.int32)
    return sparse.csr_matrix((data, indices, indptr), shape=(len(vectors), dimension))


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Write "term<TAB>idf" lines in index order after a header."""
    lines = [f"# n={vocab.n_docs} max_vocab={vocab.max_size}"]
    terms = vocab.terms
    for i, term in enumerate(terms):
        lines.append(f"{term}\t{vocab.idf[i]!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> Vocabulary:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing vocabulary header line")
    header = dict(
        part.split("=", 1) for part in lines[0].lstrip("#").split() if "=" in part
    )
    try:
        n_docs = int(header["n"])
        max_vocab = int(header["max_vocab"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: header must record n and max_vocab") from exc
    term_index: dict[str, int] = {}
    idf: list[float] = []
    for line in lines[1:]:
        if not line:
            continue
        term, _, weight = line.partition("\t")
        if not weight:
            raise ValueError(f"{path}: malformed vocabulary line {line!r}")
        term_index[term] = len(idf)
        idf.append(float(weight))
    return Vocabulary(term_index, tuple(idf), max_vocab, n_docs)
