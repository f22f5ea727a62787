"""Transcript ingestion, label taxonomy, task derivation, stratified splits.

A corpus is an ordered collection of sessions, each an ordered list of
utterances carrying fine-grained label sets.  A taxonomy maps every fine
label to a top category (EMO or COG) and a coarse class; the five tasks are
different projections of the same corpus through that mapping.  Features see
context windows (an utterance prefixed with its k predecessors), built here
so downstream code never touches session structure.
"""

from __future__ import annotations

import json
import random
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

TASKS = ("EMO-COG", "EMO-8", "COG-8", "EMO-FULL", "COG-FULL")
TOP_CATEGORIES = ("EMO", "COG")

EMOTION = "EMOTION"
NON_EMOTION = "NON-EMOTION"

PAD_TOKEN = "[PAD]"
SEP_TOKEN = "[SEP]"

_REQUIRED_FIELDS = ("session", "turn", "speaker", "text", "labels")


@dataclass(frozen=True)
class Utterance:
    """One speaker turn with its gold fine-label set."""

    session_id: str
    turn_index: int
    speaker: str
    text: str
    fine_labels: frozenset[str]


@dataclass(frozen=True)
class Corpus:
    """Sessions in input order, each holding utterances in turn order."""

    sessions: tuple[tuple[str, tuple[Utterance, ...]], ...]
    label_inventory: frozenset[str]

    @staticmethod
    def from_utterances(utterances: Iterable[Utterance]) -> "Corpus":
        """Group utterances into sessions (ordered by first appearance)."""
        by_session: dict[str, list[Utterance]] = {}
        for utt in utterances:
            by_session.setdefault(utt.session_id, []).append(utt)
        sessions = []
        inventory: set[str] = set()
        for sid, utts in by_session.items():
            utts.sort(key=lambda u: u.turn_index)
            for i, utt in enumerate(utts):
                if utt.turn_index != i:
                    raise ValueError(
                        f"session {sid!r}: turn indices must run 0..{len(utts) - 1} "
                        f"without gaps (found turn {utt.turn_index})"
                    )
                inventory.update(utt.fine_labels)
            sessions.append((sid, tuple(utts)))
        return Corpus(tuple(sessions), frozenset(inventory))

    def iter_utterances(self) -> Iterator[Utterance]:
        for _, utts in self.sessions:
            yield from utts

    @property
    def n_utterances(self) -> int:
        return sum(len(utts) for _, utts in self.sessions)


@dataclass(frozen=True)
class Taxonomy:
    """Mapping fine label -> (top category, coarse class)."""

    entries: dict[str, tuple[str, str]]

    def __post_init__(self) -> None:
        coarse_top: dict[str, str] = {}
        for fine, (top, coarse) in self.entries.items():
            if top not in TOP_CATEGORIES:
                raise ValueError(
                    f"fine label {fine!r}: top category must be one of "
                    f"{TOP_CATEGORIES}, got {top!r}"
                )
            prev = coarse_top.setdefault(coarse, top)
            if prev != top:
                raise ValueError(
                    f"coarse class {coarse!r} appears under both {prev} and {top}"
                )

    def top(self, fine: str) -> str:
        return self.entries[fine][0]

    def coarse(self, fine: str) -> str:
        return self.entries[fine][1]

    @property
    def fine_label_set(self) -> frozenset[str]:
        return frozenset(self.entries)

    def fine_labels(self, top: str) -> tuple[str, ...]:
        return tuple(sorted(f for f, (t, _) in self.entries.items() if t == top))

    def coarse_classes(self, top: str) -> tuple[str, ...]:
        return tuple(sorted({c for t, c in self.entries.values() if t == top}))


@dataclass(frozen=True)
class TaskItem:
    item_id: str
    context_text: str
    labels: frozenset[str]


@dataclass(frozen=True)
class TaskDataset:
    """One task's view of a corpus: context windows plus task-level labels."""

    task: str
    label_universe: tuple[str, ...]
    items: tuple[TaskItem, ...]
    multilabel: bool

    def label_counts(self) -> Counter:
        return Counter(lab for item in self.items for lab in item.labels)

    def subset(self, item_ids: Sequence[str]) -> "TaskDataset":
        """Items with the given ids, kept in this dataset's order."""
        wanted = set(item_ids)
        known = {it.item_id for it in self.items}
        missing = sorted(wanted - known)
        if missing:
            raise ValueError(f"unknown item ids: {', '.join(missing)}")
        kept = tuple(it for it in self.items if it.item_id in wanted)
        return TaskDataset(self.task, self.label_universe, kept, self.multilabel)


@dataclass(frozen=True)
class SplitPair:
    train: TaskDataset
    test: TaskDataset
    seed: int
    ratio: float


def parse_transcripts(path: str | Path) -> Corpus:
    """Read a JSON Lines transcript file into a Corpus.

    Each line is one utterance record: {"session", "turn", "speaker",
    "text", "labels"}.  Errors name the offending line.
    """
    path = Path(path)
    utterances: list[Utterance] = []
    seen: set[tuple[str, int]] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: malformed JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise ValueError(f"{path}:{line_no}: record must be a JSON object")
            for field_name in _REQUIRED_FIELDS:
                if field_name not in record:
                    raise ValueError(f"{path}:{line_no}: missing field {field_name!r}")
            session = record["session"]
            turn = record["turn"]
            labels = record["labels"]
            if not isinstance(session, str) or not isinstance(record["speaker"], str):
                raise ValueError(f"{path}:{line_no}: session and speaker must be strings")
            if not isinstance(record["text"], str):
                raise ValueError(f"{path}:{line_no}: text must be a string")
            if not isinstance(turn, int) or isinstance(turn, bool) or turn < 0:
                raise ValueError(f"{path}:{line_no}: turn must be a non-negative integer")
            if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
                raise ValueError(f"{path}:{line_no}: labels must be a list of strings")
            if not labels:
                raise ValueError(f"{path}:{line_no}: empty label set")
            if (session, turn) in seen:
                raise ValueError(f"{path}:{line_no}: duplicate (session, turn) ({session!r}, {turn})")
            seen.add((session, turn))
            utterances.append(
                Utterance(session, turn, record["speaker"], record["text"], frozenset(labels))
            )
    if not utterances:
        raise ValueError(f"{path}: empty transcript file")
    return Corpus.from_utterances(utterances)


def write_transcripts(corpus: Corpus, path: str | Path) -> None:
    """Serialize a Corpus back to JSON Lines (round-trips with parse)."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for sid, utts in corpus.sessions:
            for utt in utts:
                record = {
                    "session": sid,
                    "turn": utt.turn_index,
                    "speaker": utt.speaker,
                    "text": utt.text,
                    "labels": sorted(utt.fine_labels),
                }
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_taxonomy(path: str | Path) -> Taxonomy:
    """Read a taxonomy JSON file: fine label -> {"top", "coarse"}."""
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: taxonomy must be a JSON object")
    entries: dict[str, tuple[str, str]] = {}
    for fine, spec in raw.items():
        if not isinstance(spec, dict) or "top" not in spec or "coarse" not in spec:
            raise ValueError(f"{path}: entry {fine!r} must carry 'top' and 'coarse'")
        entries[fine] = (spec["top"], spec["coarse"])
    return Taxonomy(entries)


def write_taxonomy(taxonomy: Taxonomy, path: str | Path) -> None:
    payload = {
        fine: {"top": top, "coarse": coarse}
        for fine, (top, coarse) in sorted(taxonomy.entries.items())
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def default_taxonomy_path() -> Path:
    return Path(__file__).parent / "data" / "default_taxonomy.json"


def build_context_window(
    texts: Sequence[str],
    i: int,
    k: int,
    *,
    sep: str = SEP_TOKEN,
    pad: str = PAD_TOKEN,
) -> str:
    """Concatenate texts[i-k .. i] with separators, padding before index 0.

    Output always contains exactly k separator tokens; windows are built per
    session so they never cross a session boundary.
    """
    if not 0 <= i < len(texts):
        raise IndexError(f"index {i} outside session of length {len(texts)}")
    parts = [texts[j] if j >= 0 else pad for j in range(i - k, i + 1)]
    return f" {sep} ".join(parts)


def derive_task(
    corpus: Corpus,
    taxonomy: Taxonomy,
    task: str,
    k: int = 2,
    *,
    sep: str = SEP_TOKEN,
    pad: str = PAD_TOKEN,
) -> TaskDataset:
    """Project a corpus into one of the five tasks.

    EMO-COG keeps every utterance with a single binary label.  EMO-8 and
    EMO-FULL keep only utterances carrying at least one EMO fine label,
    labeled with coarse classes or fine labels respectively; COG-8 and
    COG-FULL are symmetric.  The label universe comes from the taxonomy
    (sorted), so splits and reports are stable even when a rare class is
    absent from a particular corpus.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task id {task!r}")
    if k < 0:
        raise ValueError("context depth k must be >= 0")
    missing = sorted(corpus.label_inventory - taxonomy.fine_label_set)
    if missing:
        raise ValueError(f"fine labels absent from taxonomy: {', '.join(missing)}")

    if task == "EMO-COG":
        universe: tuple[str, ...] = (EMOTION, NON_EMOTION)
        multilabel = False
    else:
        top = "EMO" if task.startswith("EMO") else "COG"
        if task.endswith("FULL"):
            universe = taxonomy.fine_labels(top)
        else:
            universe = taxonomy.coarse_classes(top)
        multilabel = True

    items: list[TaskItem] = []
    for sid, utts in corpus.sessions:
        texts = [u.text for u in utts]
        for i, utt in enumerate(utts):
            if task == "EMO-COG":
                has_emo = any(taxonomy.top(f) == "EMO" for f in utt.fine_labels)
                labels = frozenset({EMOTION if has_emo else NON_EMOTION})
            else:
                relevant = [f for f in utt.fine_labels if taxonomy.top(f) == top]
                if not relevant:
                    continue
                if task.endswith("FULL"):
                    labels = frozenset(relevant)
                else:
                    labels = frozenset(taxonomy.coarse(f) for f in relevant)
            items.append(
                TaskItem(
                    f"{sid}:{utt.turn_index}",
                    build_context_window(texts, i, k, sep=sep, pad=pad),
                    labels,
                )
            )
    return TaskDataset(task, universe, tuple(items), multilabel)


def stratified_split(dataset: TaskDataset, ratio: float, seed: int) -> SplitPair:
    """Split into train/test preserving per-label proportions.

    Iterative stratification: items are assigned in ascending order of their
    rarest label's global count (rarest first, so singleton labels land in
    train), each going to the fold furthest below its target count for that
    label.  Ties fall back to overall fold size, then to the seeded RNG.
    Deterministic given (dataset, ratio, seed).
    """
    if not dataset.items:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")

    items = dataset.items
    n = len(items)
    counts = Counter(lab for item in items for lab in item.labels)

    def rarest(item: TaskItem) -> str:
        return min(item.labels, key=lambda lab: (counts[lab], lab))

    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    # Stable sort on top of the shuffle: equal-rarity ties fall in seeded
    # random order rather than input order.
    order.sort(key=lambda i: counts[rarest(items[i])])

    fold_fraction = (ratio, 1.0 - ratio)
    target = [{lab: frac * c for lab, c in counts.items()} for frac in fold_fraction]
    total_target = [frac * n for frac in fold_fraction]
    have: list[dict[str, int]] = [defaultdict(int), defaultdict(int)]
    have_total = [0, 0]
    assign: list[int] = [0] * n

    for i in order:
        lab = rarest(items[i])
        need = [target[f][lab] - have[f][lab] for f in (0, 1)]
        if need[0] > need[1]:
            fold = 0
        elif need[1] > need[0]:
            fold = 1
        else:
            overall = [total_target[f] - have_total[f] for f in (0, 1)]
            if overall[0] > overall[1]:
                fold = 0
            elif overall[1] > overall[0]:
                fold = 1
            else:
                fold = rng.randrange(2)
        assign[i] = fold
        have_total[fold] += 1
        for item_lab in items[i].labels:
            have[fold][item_lab] += 1

    train_items = tuple(it for it, f in zip(items, assign) if f == 0)
    test_items = tuple(it for it, f in zip(items, assign) if f == 1)
    train = TaskDataset(dataset.task, dataset.label_universe, train_items, dataset.multilabel)
    test = TaskDataset(dataset.task, dataset.label_universe, test_items, dataset.multilabel)
    return SplitPair(train, test, seed, ratio)


def write_split_manifest(pair: SplitPair, train_path: str | Path, test_path: str | Path) -> None:
    """Write train/test item-id manifests, one id per line after a header."""
    for ds, path in ((pair.train, train_path), (pair.test, test_path)):
        lines = [f"# seed={pair.seed} ratio={pair.ratio!r}"]
        lines.extend(it.item_id for it in ds.items)
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_split_manifest(path: str | Path) -> tuple[int, float, list[str]]:
    """Read a manifest; returns (seed, ratio, item_ids)."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError(f"{path}: missing manifest header line")
    header = dict(
        part.split("=", 1) for part in lines[0].lstrip("#").split() if "=" in part
    )
    try:
        seed = int(header["seed"])
        ratio = float(header["ratio"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: header must record seed and ratio") from exc
    ids = [line.strip() for line in lines[1:] if line.strip()]
    return seed, ratio, ids


def split_from_manifests(
    dataset: TaskDataset, train_path: str | Path, test_path: str | Path
) -> SplitPair:
    """Rebuild a SplitPair from previously written manifests."""
    seed, ratio, train_ids = read_split_manifest(train_path)
    _, _, test_ids = read_split_manifest(test_path)
    overlap = set(train_ids) & set(test_ids)
    if overlap:
        raise ValueError(f"manifests overlap on ids: {', '.join(sorted(overlap)[:5])}")
    return SplitPair(dataset.subset(train_ids), dataset.subset(test_ids), seed, ratio)
