"""Command-line entry point.

Subcommands: ingest, split, train, evaluate, report, score-external,
gen-synth.  Every command exits 0 on success and nonzero with a named
error on stderr otherwise.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from uttlabel.chain import BASE_LEARNERS, fit_chain, predict_chain
from uttlabel.corpus import (
    TASKS,
    default_taxonomy_path,
    derive_task,
    load_taxonomy,
    parse_transcripts,
    split_from_manifests,
    stratified_split,
    write_split_manifest,
)
from uttlabel.features import (
    fit_tfidf,
    load_vocabulary,
    normalize_tokens,
    save_vocabulary,
    transform_tfidf,
    vectors_to_csr,
)
from uttlabel.learners import load_model, predict, save_model, train_learner
from uttlabel.metrics import LabelMatrix
from uttlabel.runner import (
    _run_model,
    _write_runs_csv,
    load_config,
    run_experiment,
    score_external,
    score_predictions,
    write_predictions,
)
from uttlabel.seeding import stable_seed
from uttlabel.synth import SynthSpec, write_synthetic_corpus


def _cmd_ingest(args: argparse.Namespace) -> int:
    corpus = parse_transcripts(args.corpus)
    if args.taxonomy is not None:
        taxonomy = load_taxonomy(args.taxonomy)
        missing = sorted(corpus.label_inventory - taxonomy.fine_label_set)
        if missing:
            raise ValueError(
                f"corpus labels missing from taxonomy: {', '.join(missing[:10])}"
            )
    print(
        f"sessions={len(corpus.sessions)} "
        f"utterances={corpus.n_utterances} "
        f"distinct_labels={len(corpus.label_inventory)}"
    )
    return 0


def _cmd_split(args: argparse.Namespace) -> int:
    corpus = parse_transcripts(args.corpus)
    taxonomy = load_taxonomy(args.taxonomy)
    dataset = derive_task(corpus, taxonomy, args.task, args.k)
    split = stratified_split(dataset, args.ratio, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_split_manifest(split, out / "train.txt", out / "test.txt")
    print(
        f"task={args.task} train={len(split.train.items)} test={len(split.test.items)}"
    )
    return 0


def _load_overrides(config_path: str | None, model: str) -> dict:
    if config_path is None:
        return {}
    raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError(f"{config_path}: config must be a JSON object")
    hyper = raw.get("hyperparameters", raw)
    spec = hyper.get(model, {})
    if not isinstance(spec, dict):
        raise ValueError(f"{config_path}: hyperparameters for {model!r} must be an object")
    return dict(spec)


def _cmd_train(args: argparse.Namespace) -> int:
    corpus = parse_transcripts(args.corpus)
    taxonomy = load_taxonomy(args.taxonomy)
    dataset = derive_task(corpus, taxonomy, args.task, args.k)
    split = stratified_split(
        dataset, args.ratio, stable_seed(args.seed, f"split:{args.task}")
    )
    train_docs = [normalize_tokens(it.context_text) for it in split.train.items]
    vocab = fit_tfidf(train_docs, args.max_vocab)
    X_train = vectors_to_csr(
        [transform_tfidf(vocab, d) for d in train_docs], len(vocab)
    )
    hyper = _load_overrides(args.config, args.model)
    spec = {"model": args.model, **hyper}
    unit_seed = stable_seed(args.seed, f"{args.task}:{args.model}")

    if dataset.multilabel:
        Y = LabelMatrix.from_label_sets(
            [it.labels for it in split.train.items], dataset.label_universe
        )
        model = fit_chain(spec, X_train, Y, seed=unit_seed)
    else:
        y_train = [next(iter(it.labels)) for it in split.train.items]
        model = train_learner(spec, X_train, y_train, dataset.label_universe, unit_seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_model(model, out / "model.zip")
    save_vocabulary(vocab, out / "vocab.tsv")
    write_split_manifest(split, out / "train.txt", out / "test.txt")
    meta = {
        "task": args.task,
        "model": args.model,
        "k": args.k,
        "seed": args.seed,
        "max_vocab": args.max_vocab,
        "multilabel": dataset.multilabel,
        "label_universe": list(dataset.label_universe),
    }
    (out / "meta.json").write_text(
        json.dumps(meta, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    print(f"trained {args.model} on {args.task}: {len(split.train.items)} items")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    model_dir = Path(args.model_dir)
    meta = json.loads((model_dir / "meta.json").read_text(encoding="utf-8"))
    corpus = parse_transcripts(args.corpus)
    taxonomy = load_taxonomy(args.taxonomy)
    dataset = derive_task(corpus, taxonomy, meta["task"], meta["k"])
    split = split_from_manifests(dataset, model_dir / "train.txt", model_dir / "test.txt")
    vocab = load_vocabulary(model_dir / "vocab.tsv")
    X_test = vectors_to_csr(
        [
            transform_tfidf(vocab, normalize_tokens(it.context_text))
            for it in split.test.items
        ],
        len(vocab),
    )
    model = load_model(model_dir / "model.zip")
    universe = tuple(meta["label_universe"])
    if meta["multilabel"]:
        matrix = predict_chain(model, X_test)
        pred_sets = [
            frozenset(lab for lab, flag in zip(universe, row) if flag)
            for row in matrix.rows
        ]
    else:
        picks, _ = predict(model, X_test)
        pred_sets = [frozenset({p}) for p in picks]

    row = score_predictions(
        [it.labels for it in split.test.items],
        pred_sets,
        universe,
        meta["multilabel"],
        meta["task"],
        meta["model"],
        meta["seed"],
    )
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_predictions(
            out / "predictions.jsonl",
            [it.item_id for it in split.test.items],
            pred_sets,
        )
        _write_runs_csv(out / "metrics.csv", [row])
    third = f"acc={row.acc:.2f}" if row.acc is not None else f"hl={row.hl:.2f}"
    print(
        f"task={row.task} model={row.model} "
        f"w_f1={row.w_f1:.2f} m_f1={row.m_f1:.2f} {third}"
    )
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    table = run_experiment(config, args.out)
    print(f"wrote {len(table.rows)} aggregated rows to {args.out}")
    return 0


def _cmd_score_external(args: argparse.Namespace) -> int:
    row = score_external(
        args.pred, args.gold, args.task, args.labels, args.weight_source
    )
    third = f"acc={row.acc:.2f}" if row.acc is not None else f"hl={row.hl:.2f}"
    print(f"task={row.task} w_f1={row.w_f1:.2f} m_f1={row.m_f1:.2f} {third}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_runs_csv(out / "metrics.csv", [row])
    return 0


def _cmd_gen_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec(
        size=args.size,
        rate_two=args.rate_two,
        rate_three=args.rate_three,
        emo_fraction=args.emo_fraction,
        stickiness=args.stickiness,
    )
    transcripts, taxonomy = write_synthetic_corpus(spec, args.seed, args.out)
    print(f"wrote {transcripts} and {taxonomy}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uttlabel",
        description="Utterance labeling over conversation transcripts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate a transcript file")
    p_ingest.add_argument("--corpus", required=True)
    p_ingest.add_argument("--taxonomy", default=None)
    p_ingest.set_defaults(func=_cmd_ingest)

    p_split = sub.add_parser("split", help="write train/test split manifests")
    p_split.add_argument("--corpus", required=True)
    p_split.add_argument("--taxonomy", default=str(default_taxonomy_path()))
    p_split.add_argument("--task", required=True, choices=sorted(TASKS))
    p_split.add_argument("--ratio", type=float, default=0.9)
    p_split.add_argument("--seed", type=int, default=0)
    p_split.add_argument("--k", type=int, default=2)
    p_split.add_argument("--out", required=True)
    p_split.set_defaults(func=_cmd_split)

    p_train = sub.add_parser("train", help="train one model on the train split")
    p_train.add_argument("--corpus", required=True)
    p_train.add_argument("--taxonomy", default=str(default_taxonomy_path()))
    p_train.add_argument("--task", required=True, choices=sorted(TASKS))
    p_train.add_argument("--model", required=True, choices=BASE_LEARNERS)
    p_train.add_argument("--ratio", type=float, default=0.9)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--k", type=int, default=2)
    p_train.add_argument("--max-vocab", type=int, default=3034)
    p_train.add_argument("--config", default=None, help="JSON hyperparameter overrides")
    p_train.add_argument("--out", required=True)
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("evaluate", help="score a trained model on its test split")
    p_eval.add_argument("--model-dir", required=True)
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--taxonomy", default=str(default_taxonomy_path()))
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(func=_cmd_evaluate)

    p_report = sub.add_parser("report", help="run the full experiment grid")
    p_report.add_argument("--config", required=True)
    p_report.add_argument("--out", required=True)
    p_report.set_defaults(func=_cmd_report)

    p_score = sub.add_parser(
        "score-external", help="score a prediction file against gold"
    )
    p_score.add_argument("--pred", required=True)
    p_score.add_argument("--gold", required=True)
    p_score.add_argument("--task", required=True, choices=sorted(TASKS))
    p_score.add_argument("--labels", default=None, help="label universe file")
    p_score.add_argument("--weight-source", choices=("eval", "train"), default="eval")
    p_score.add_argument("--out", default=None)
    p_score.set_defaults(func=_cmd_score_external)

    p_synth = sub.add_parser("gen-synth", help="generate a synthetic corpus")
    p_synth.add_argument("--size", type=int, default=5000)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--rate-two", type=float, default=0.24)
    p_synth.add_argument("--rate-three", type=float, default=0.12)
    p_synth.add_argument("--emo-fraction", type=float, default=0.1724)
    p_synth.add_argument("--stickiness", type=float, default=0.6)
    p_synth.add_argument("--out", required=True)
    p_synth.set_defaults(func=_cmd_gen_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        name = type(exc).__name__
        print(f"{name}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
