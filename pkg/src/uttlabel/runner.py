"""Experiment orchestration: config loading, end-to-end runs, report files,
external-prediction scoring, and per-class error analysis.

Seed discipline: the split for each task derives from the config's master
seed; each (task, model, run-seed) training unit derives its own seed from
the run seed and the unit name.  Deterministic models (baseline, NB,
AdaBoost+NB, LR) run once regardless of the seed list; RF and GD-SVM run
once per seed and aggregate to mean +/- sample std.  All output files are
byte-identical across repeat runs of the same config.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from uttlabel.chain import fit_chain, predict_chain
from uttlabel.corpus import (
    EMOTION,
    NON_EMOTION,
    TASKS,
    SplitPair,
    TaskDataset,
    derive_task,
    load_taxonomy,
    parse_transcripts,
    stratified_split,
    write_split_manifest,
)
from uttlabel.features import (
    fit_tfidf,
    normalize_tokens,
    save_vocabulary,
    transform_tfidf,
    vectors_to_csr,
)
from uttlabel.learners import predict, train_learner
from uttlabel.metrics import (
    AggregateRow,
    LabelMatrix,
    MetricsRow,
    aggregate_runs,
    confusion_counts,
    f1_scores,
    hamming_loss,
    majority_baseline,
)
from uttlabel.seeding import stable_seed

MODELS = ("baseline", "nb", "adaboost_nb", "rf", "gd_svm", "logreg")
SEEDED_MODELS = frozenset({"rf", "gd_svm"})

_VERSION_FALLBACK = "0.1.0"


@dataclass(frozen=True)
class ExperimentConfig:
    corpus: Path
    taxonomy: Path
    tasks: tuple[str, ...] = ("EMO-COG",)
    models: tuple[str, ...] = MODELS
    seeds: tuple[int, ...] = (1, 2, 3)
    ratio: float = 0.9
    k: int = 2
    max_vocab: int = 3034
    weight_source: str = "eval"
    master_seed: int = 0
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for task in self.tasks:
            if task not in TASKS:
                raise ValueError(f"unknown task id {task!r}")
        for model in self.models:
            if model not in MODELS:
                raise ValueError(f"unknown model id {model!r}")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        if self.k < 0:
            raise ValueError("context depth k must be >= 0")
        if self.weight_source not in ("eval", "train"):
            raise ValueError("weight_source must be 'eval' or 'train'")

    def digest(self) -> str:
        payload = {
            "corpus": str(self.corpus),
            "taxonomy": str(self.taxonomy),
            "tasks": list(self.tasks),
            "models": list(self.models),
            "seeds": list(self.seeds),
            "ratio": self.ratio,
            "k": self.k,
            "max_vocab": self.max_vocab,
            "weight_source": self.weight_source,
            "master_seed": self.master_seed,
            "hyperparameters": self.hyperparameters,
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a JSON config; relative paths resolve against the config file."""
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    base = path.parent
    try:
        corpus = base / raw["corpus"]
        taxonomy = base / raw["taxonomy"]
    except KeyError as exc:
        raise ValueError(f"{path}: missing config key {exc.args[0]!r}") from exc
    return ExperimentConfig(
        corpus=corpus,
        taxonomy=taxonomy,
        tasks=tuple(raw.get("tasks", ("EMO-COG",))),
        models=tuple(raw.get("models", MODELS)),
        seeds=tuple(int(s) for s in raw.get("seeds", (1, 2, 3))),
        ratio=float(raw.get("ratio", 0.9)),
        k=int(raw.get("k", 2)),
        max_vocab=int(raw.get("max_vocab", 3034)),
        weight_source=str(raw.get("weight_source", "eval")),
        master_seed=int(raw.get("master_seed", 0)),
        hyperparameters=dict(raw.get("hyperparameters", {})),
    )


@dataclass(frozen=True)
class ReportTable:
    rows: tuple[AggregateRow, ...]
    provenance: dict


@dataclass(frozen=True)
class RunResult:
    """One trained-and-scored (task, model, seed) cell."""

    row: MetricsRow
    predictions: tuple[frozenset[str], ...]


def _artifact_version() -> str:
    try:
        from uttlabel import __version__

        return __version__
    except ImportError:
        return _VERSION_FALLBACK


def _featurize(split: SplitPair, max_vocab: int):
    train_docs = [normalize_tokens(it.context_text) for it in split.train.items]
    test_docs = [normalize_tokens(it.context_text) for it in split.test.items]
    vocab = fit_tfidf(train_docs, max_vocab)
    X_train = vectors_to_csr([transform_tfidf(vocab, d) for d in train_docs], len(vocab))
    X_test = vectors_to_csr([transform_tfidf(vocab, d) for d in test_docs], len(vocab))
    return vocab, X_train, X_test


def _single_label(items) -> list[str]:
    labels = []
    for item in items:
        if len(item.labels) != 1:
            raise ValueError(f"item {item.item_id} is not single-label")
        labels.append(next(iter(item.labels)))
    return labels


def score_predictions(
    truth_sets: Sequence[Iterable[str]],
    pred_sets: Sequence[Iterable[str]],
    universe: Sequence[str],
    multilabel: bool,
    task: str,
    model: str,
    seed: int | None,
    weight_source: str = "eval",
    train_support: Sequence[int] | None = None,
) -> MetricsRow:
    """The one scoring path: internal runs and external files both land here."""
    truth = LabelMatrix.from_label_sets([frozenset(t) for t in truth_sets], universe)
    pred = LabelMatrix.from_label_sets([frozenset(p) for p in pred_sets], universe)
    counts = confusion_counts(truth, pred)
    scores = f1_scores(counts, weight_source, train_support)
    if multilabel:
        third = {"hl": 100.0 * hamming_loss(truth, pred)}
    else:
        t_labels = [_only(t) for t in truth_sets]
        p_labels = [_only(p) for p in pred_sets]
        matches = sum(1 for t, p in zip(t_labels, p_labels) if t == p)
        third = {"acc": 100.0 * matches / len(t_labels)}
    return MetricsRow(
        task, model, seed, 100.0 * scores.weighted, 100.0 * scores.macro, **third
    )


def _only(labels: Iterable[str]) -> str:
    labels = list(labels)
    if len(labels) != 1:
        raise ValueError(f"expected exactly one label, got {labels!r}")
    return labels[0]


def _run_model(
    task_ds: TaskDataset,
    split: SplitPair,
    X_train,
    X_test,
    model_id: str,
    hyper: dict,
    run_seed: int | None,
    weight_source: str,
) -> RunResult:
    universe = task_ds.label_universe
    train_support = None
    if weight_source == "train":
        counts = split.train.label_counts()
        train_support = [counts.get(lab, 0) for lab in universe]

    unit_seed = 0
    if run_seed is not None:
        unit_seed = stable_seed(run_seed, f"{task_ds.task}:{model_id}")

    if model_id == "baseline":
        predictor = majority_baseline([it.labels for it in split.train.items])
        pred_sets = tuple(predictor.predict(len(split.test.items)))
    elif task_ds.multilabel:
        Y = LabelMatrix.from_label_sets([it.labels for it in split.train.items], universe)
        spec = {"model": model_id, **hyper}
        chain = fit_chain(spec, X_train, Y, seed=unit_seed)
        matrix = predict_chain(chain, X_test)
        pred_sets = tuple(
            frozenset(
                lab for lab, flag in zip(universe, row) if flag
            )
            for row in matrix.rows
        )
    else:
        y_train = _single_label(split.train.items)
        spec = {"model": model_id, **hyper}
        model = train_learner(spec, X_train, y_train, universe, unit_seed)
        picks, _ = predict(model, X_test)
        pred_sets = tuple(frozenset({p}) for p in picks)

    row = score_predictions(
        [it.labels for it in split.test.items],
        pred_sets,
        universe,
        task_ds.multilabel,
        task_ds.task,
        model_id,
        run_seed,
        weight_source,
        train_support,
    )
    return RunResult(row, pred_sets)


def write_predictions(path: str | Path, item_ids: Sequence[str], label_sets) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for item_id, labels in zip(item_ids, label_sets):
            record = {"item_id": item_id, "labels": sorted(labels)}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def read_predictions(path: str | Path) -> dict[str, frozenset[str]]:
    path = Path(path)
    out: dict[str, frozenset[str]] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: malformed JSON ({exc.msg})") from exc
            if "item_id" not in record or "labels" not in record:
                raise ValueError(f"{path}:{line_no}: record needs item_id and labels")
            item_id = record["item_id"]
            if item_id in out:
                raise ValueError(f"{path}:{line_no}: duplicate item_id {item_id!r}")
            out[item_id] = frozenset(record["labels"])
    if not out:
        raise ValueError(f"{path}: no prediction records")
    return out


@dataclass(frozen=True)
class ErrorAnalysisRow:
    label: str
    precision: float
    recall: float
    f1: float
    support: int
    predicted: int
    precision_undefined: bool


def error_analysis(truth: LabelMatrix, pred: LabelMatrix) -> list[ErrorAnalysisRow]:
    """Per-class precision/recall/F1, worst F1 first.

    Classes with true instances that are never predicted report precision 0
    with an explicit undefined marker instead of being dropped.
    """
    counts = confusion_counts(truth, pred)
    rows = []
    for i, label in enumerate(counts.label_universe):
        tp, fp, fn = counts.tp[i], counts.fp[i], counts.fn[i]
        predicted = tp + fp
        precision = tp / predicted if predicted > 0 else 0.0
        support = tp + fn
        recall = tp / support if support > 0 else 0.0
        denom = tp + 0.5 * (fp + fn)
        f1 = tp / denom if denom > 0 else 0.0
        rows.append(
            ErrorAnalysisRow(
                label, precision, recall, f1, support, predicted, predicted == 0
            )
        )
    rows.sort(key=lambda r: (r.f1, r.label))
    return rows


def _write_error_analysis(path: Path, rows: Sequence[ErrorAnalysisRow]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["label", "precision", "recall", "f1", "support", "predicted", "flag"]
        )
        for r in rows:
            writer.writerow(
                [
                    r.label,
                    f"{r.precision:.6f}",
                    f"{r.recall:.6f}",
                    f"{r.f1:.6f}",
                    r.support,
                    r.predicted,
                    "never-predicted" if r.precision_undefined else "",
                ]
            )


def _fmt_cell(value: float | None) -> str:
    return "" if value is None else repr(value)


def _write_runs_csv(path: Path, rows: Sequence[MetricsRow]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["task", "model", "seed", "w_f1", "m_f1", "acc", "hl"])
        for r in rows:
            writer.writerow(
                [
                    r.task,
                    r.model,
                    "" if r.seed is None else r.seed,
                    repr(r.w_f1),
                    repr(r.m_f1),
                    _fmt_cell(r.acc),
                    _fmt_cell(r.hl),
                ]
            )


def _write_aggregate_csv(path: Path, rows: Sequence[AggregateRow]) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "task",
                "model",
                "runs",
                "w_f1_mean",
                "w_f1_std",
                "m_f1_mean",
                "m_f1_std",
                "acc_mean",
                "acc_std",
                "hl_mean",
                "hl_std",
            ]
        )
        for r in rows:
            acc_mean = acc_std = hl_mean = hl_std = ""
            if r.third_kind == "acc":
                acc_mean, acc_std = f"{r.third_metric:.2f}", f"{r.third_metric_std:.2f}"
            else:
                hl_mean, hl_std = f"{r.third_metric:.2f}", f"{r.third_metric_std:.2f}"
            writer.writerow(
                [
                    r.task,
                    r.model,
                    r.n_runs,
                    f"{r.w_f1:.2f}",
                    f"{r.w_f1_std:.2f}",
                    f"{r.m_f1:.2f}",
                    f"{r.m_f1_std:.2f}",
                    acc_mean,
                    acc_std,
                    hl_mean,
                    hl_std,
                ]
            )


def _fmt_metric(mean: float, std: float, n_runs: int) -> str:
    if n_runs > 1:
        return f"{mean:.2f} ± {std:.2f}"
    return f"{mean:.2f}"


def _write_text_report(path: Path, rows: Sequence[AggregateRow], provenance: dict) -> None:
    lines = [
        "Utterance labeling results",
        f"config digest: {provenance['config_digest']}",
        f"artifact version: {provenance['artifact_version']}",
    ]
    tasks = []
    for r in rows:
        if r.task not in tasks:
            tasks.append(r.task)
    for task in tasks:
        block = [r for r in rows if r.task == task]
        third_name = "ACC" if block[0].third_kind == "acc" else "HL"
        lines.append("")
        lines.append(f"Task {task}")
        lines.append(f"{'model':<14}{'W-F1':>16}{'M-F1':>16}{third_name:>16}")
        for r in block:
            lines.append(
                f"{r.model:<14}"
                f"{_fmt_metric(r.w_f1, r.w_f1_std, r.n_runs):>16}"
                f"{_fmt_metric(r.m_f1, r.m_f1_std, r.n_runs):>16}"
                f"{_fmt_metric(r.third_metric, r.third_metric_std, r.n_runs):>16}"
            )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_experiment(config: ExperimentConfig, out_dir: str | Path) -> ReportTable:
    """Execute tasks x models x seeds and write every report artifact.

    Per task: derive the dataset, split once (seed derived from the master
    seed), fit TF-IDF on the train split only, then train and score each
    requested model.  Outputs under out_dir: runs.csv, aggregate.csv,
    report.txt, provenance.json, plus per-task split manifests, vocabulary,
    gold labels, predictions, and per-(task, model) error analyses.
    """
    out = Path(out_dir)
    for sub in ("splits", "vocab", "gold", "predictions", "error_analysis"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    corpus = parse_transcripts(config.corpus)
    taxonomy = load_taxonomy(config.taxonomy)

    all_rows: list[MetricsRow] = []
    aggregated: list[AggregateRow] = []

    for task in config.tasks:
        task_ds = derive_task(corpus, taxonomy, task, config.k)
        if not task_ds.items:
            raise ValueError(f"task {task} produced no items on this corpus")
        split = stratified_split(
            task_ds, config.ratio, stable_seed(config.master_seed, f"split:{task}")
        )
        if not split.test.items or not split.train.items:
            raise ValueError(f"task {task}: split left an empty train or test set")
        write_split_manifest(
            split, out / "splits" / f"{task}_train.txt", out / "splits" / f"{task}_test.txt"
        )

        vocab, X_train, X_test = _featurize(split, config.max_vocab)
        save_vocabulary(vocab, out / "vocab" / f"{task}_vocab.tsv")

        test_ids = [it.item_id for it in split.test.items]
        write_predictions(
            out / "gold" / f"{task}_gold.jsonl",
            test_ids,
            [it.labels for it in split.test.items],
        )
        (out / "gold" / f"{task}_labels.txt").write_text(
            "\n".join(task_ds.label_universe) + "\n", encoding="utf-8"
        )

        for model_id in config.models:
            hyper = dict(config.hyperparameters.get(model_id, {}))
            run_seeds: tuple[int | None, ...]
            if model_id in SEEDED_MODELS:
                run_seeds = tuple(config.seeds)
            else:
                run_seeds = (None,)

            results = []
            for run_seed in run_seeds:
                result = _run_model(
                    task_ds,
                    split,
                    X_train,
                    X_test,
                    model_id,
                    hyper,
                    run_seed,
                    config.weight_source,
                )
                results.append(result)
                all_rows.append(result.row)
                suffix = "" if run_seed is None else f"_seed{run_seed}"
                write_predictions(
                    out / "predictions" / f"{task}_{model_id}{suffix}.jsonl",
                    test_ids,
                    result.predictions,
                )

            aggregated.append(aggregate_runs([r.row for r in results]))

            truth = LabelMatrix.from_label_sets(
                [it.labels for it in split.test.items], task_ds.label_universe
            )
            first_pred = LabelMatrix.from_label_sets(
                list(results[0].predictions), task_ds.label_universe
            )
            _write_error_analysis(
                out / "error_analysis" / f"{task}_{model_id}.csv",
                error_analysis(truth, first_pred),
            )

    provenance = {
        "config_digest": config.digest(),
        "artifact_version": _artifact_version(),
    }
    _write_runs_csv(out / "runs.csv", all_rows)
    _write_aggregate_csv(out / "aggregate.csv", aggregated)
    _write_text_report(out / "report.txt", aggregated, provenance)
    (out / "provenance.json").write_text(
        json.dumps(provenance, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    return ReportTable(tuple(aggregated), provenance)


def score_external(
    pred_path: str | Path,
    gold_path: str | Path,
    task: str,
    labels_path: str | Path | None = None,
    weight_source: str = "eval",
) -> MetricsRow:
    """Score externally produced predictions against a gold file.

    Both files are JSON Lines {"item_id", "labels"}; the item_id sets must
    match exactly.  The label universe comes from labels_path (one label per
    line, as written by run_experiment) when given; EMO-COG always uses its
    fixed binary universe; otherwise the sorted union of observed labels.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task id {task!r}")
    gold_order: list[str] = []
    gold: dict[str, frozenset[str]] = {}
    with Path(gold_path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            gold_order.append(record["item_id"])
            gold[record["item_id"]] = frozenset(record["labels"])
    if not gold:
        raise ValueError(f"{gold_path}: no gold records")
    preds = read_predictions(pred_path)

    missing = sorted(set(gold) - set(preds))
    extra = sorted(set(preds) - set(gold))
    if missing or extra:
        parts = []
        if missing:
            parts.append(f"missing ids: {', '.join(missing[:5])}")
        if extra:
            parts.append(f"extra ids: {', '.join(extra[:5])}")
        raise ValueError(f"prediction ids do not match gold ({'; '.join(parts)})")

    multilabel = task != "EMO-COG"
    if labels_path is not None:
        universe = tuple(
            line.strip()
            for line in Path(labels_path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
    elif not multilabel:
        universe = (EMOTION, NON_EMOTION)
    else:
        observed = set()
        for labels in gold.values():
            observed.update(labels)
        for labels in preds.values():
            observed.update(labels)
        universe = tuple(sorted(observed))

    allowed = set(universe)
    for item_id in gold_order:
        bad = (gold[item_id] | preds[item_id]) - allowed
        if bad:
            raise ValueError(
                f"item {item_id}: label {sorted(bad)[0]!r} outside the task universe"
            )

    return score_predictions(
        [gold[i] for i in gold_order],
        [preds[i] for i in gold_order],
        universe,
        multilabel,
        task,
        "external",
        None,
        weight_source,
    )
