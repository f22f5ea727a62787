"""Synthetic transcript generator with a matching taxonomy.

Utterance texts are built from per-fine-label keyword vocabularies plus
shared filler words, so every task is learnable from token features.  The
top category (EMO vs COG) follows a sticky two-state Markov chain within
each session: a label's context window tends to share its top category,
which is what makes context features informative rather than noise.

Label-set sizes are sampled directly from the configured distribution:
P(two labels) = rate_two, P(three) = rate_three, else one label.  All of an
utterance's fine labels come from its top category.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from uttlabel.corpus import Corpus, Taxonomy, Utterance, write_taxonomy, write_transcripts

EMO_COARSE = (
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "sadness",
    "surprise",
    "trust",
)
COG_COARSE = (
    "agreement",
    "clarification",
    "description",
    "disclosure",
    "evaluation",
    "planning",
    "procedure",
    "suggestion",
)

_EMO_VERBS = ("express", "describe", "recall")
_COG_VERBS = ("make", "offer", "request", "extend", "state")

_FILLERS = ("today", "talk", "week", "felt", "school", "work", "home", "night")

_SPEAKERS = ("counselor", "client")


@dataclass(frozen=True)
class SynthSpec:
    """Generator parameters; defaults mirror the corpus shape targets."""

    size: int = 5000
    rate_two: float = 0.24
    rate_three: float = 0.12
    emo_fraction: float = 0.1724
    stickiness: float = 0.6
    n_fine_emo: int = 20
    n_fine_cog: int = 39
    min_session: int = 15
    max_session: int = 30

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValueError("size must be >= 1")
        for name in ("rate_two", "rate_three", "emo_fraction", "stickiness"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.rate_two + self.rate_three > 1.0:
            raise ValueError("rate_two + rate_three must not exceed 1")
        if self.n_fine_emo < 1 or self.n_fine_cog < 1:
            raise ValueError("need at least one fine label per top category")
        if not 1 <= self.min_session <= self.max_session:
            raise ValueError("session length bounds must satisfy 1 <= min <= max")


def _fine_names(top: str, count: int) -> list[str]:
    verbs = _EMO_VERBS if top == "EMO" else _COG_VERBS
    coarse = EMO_COARSE if top == "EMO" else COG_COARSE
    if count > len(verbs) * len(coarse):
        raise ValueError(f"at most {len(verbs) * len(coarse)} fine labels under {top}")
    return [f"{verbs[i // len(coarse)]} {coarse[i % len(coarse)]}" for i in range(count)]


def synthetic_taxonomy(spec: SynthSpec = SynthSpec()) -> Taxonomy:
    """Fine labels distributed round-robin over the 8 coarse classes."""
    entries: dict[str, tuple[str, str]] = {}
    for top, count, coarse in (
        ("EMO", spec.n_fine_emo, EMO_COARSE),
        ("COG", spec.n_fine_cog, COG_COARSE),
    ):
        for i, name in enumerate(_fine_names(top, count)):
            entries[name] = (top, coarse[i % len(coarse)])
    return Taxonomy(entries)


def _keywords(top: str, index: int) -> tuple[str, str, str]:
    stem = f"{top.lower()}{index}"
    return (f"{stem}a", f"{stem}b", f"{stem}c")


def generate_synthetic_corpus(spec: SynthSpec, seed: int) -> tuple[Corpus, Taxonomy]:
    """Deterministic synthetic corpus plus the taxonomy describing it."""
    taxonomy = synthetic_taxonomy(spec)
    fine_by_top = {
        "EMO": _fine_names("EMO", spec.n_fine_emo),
        "COG": _fine_names("COG", spec.n_fine_cog),
    }
    keyword_of = {
        top: [_keywords(top, i) for i in range(len(names))]
        for top, names in fine_by_top.items()
    }

    rng = random.Random(seed)
    utterances: list[Utterance] = []
    session_no = 0
    produced = 0
    while produced < spec.size:
        session_no += 1
        session_id = f"synth-{session_no:04d}"
        length = min(rng.randint(spec.min_session, spec.max_session), spec.size - produced)
        state = "EMO" if rng.random() < spec.emo_fraction else "COG"
        for turn in range(length):
            if turn > 0:
                # sticky interpolation keeps the stationary EMO fraction
                p_emo = spec.stickiness * (state == "EMO") + (
                    1.0 - spec.stickiness
                ) * spec.emo_fraction
                state = "EMO" if rng.random() < p_emo else "COG"

            roll = rng.random()
            if roll < spec.rate_three:
                n_labels = 3
            elif roll < spec.rate_three + spec.rate_two:
                n_labels = 2
            else:
                n_labels = 1
            pool = fine_by_top[state]
            n_labels = min(n_labels, len(pool))
            chosen = rng.sample(range(len(pool)), n_labels)

            tokens: list[str] = []
            for idx in chosen:
                tokens.extend(rng.sample(keyword_of[state][idx], 2))
            tokens.extend(rng.choice(_FILLERS) for _ in range(2))
            rng.shuffle(tokens)

            utterances.append(
                Utterance(
                    session_id,
                    turn,
                    _SPEAKERS[turn % 2],
                    " ".join(tokens),
                    frozenset(pool[idx] for idx in chosen),
                )
            )
            produced += 1

    return Corpus.from_utterances(utterances), taxonomy


def write_synthetic_corpus(
    spec: SynthSpec, seed: int, out_dir: str | Path
) -> tuple[Path, Path]:
    """Generate and write transcripts.jsonl + taxonomy.json; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus, taxonomy = generate_synthetic_corpus(spec, seed)
    transcript_path = out_dir / "transcripts.jsonl"
    taxonomy_path = out_dir / "taxonomy.json"
    write_transcripts(corpus, transcript_path)
    write_taxonomy(taxonomy, taxonomy_path)
    return transcript_path, taxonomy_path
