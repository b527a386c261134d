"""Command-line front end: train, eval, predict, synth, and the two plots."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import (
    CorpusError,
    load_corpus,
    synthesize_corpus,
    write_corpus,
)
from .metrics import ALL_JOINT, ERE_TASK, PLUS_JOINT, ere_regime_eval, format_table, reports_to_json
from .training import (
    REGIMES,
    Checkpoint,
    CheckpointError,
    TASKS,
    TrainConfig,
    TrainingLog,
    collect_predictions,
    evaluate,
    parse_flat_config,
    predict_records,
    train,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eventenergy",
        description="Joint energy-based trigger / event / event-relation models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model on a JSONL corpus")
    p_train.add_argument("--config", help="flat key=value config file")
    p_train.add_argument("--corpus", help="training corpus (overrides train_path from the config)")
    p_train.add_argument("--regime", choices=sorted(REGIMES), help="lambda preset")
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--mention-cap", type=int, dest="mention_cap")
    p_train.add_argument("--out", help="checkpoint output path (default model.ckpt)")
    p_train.add_argument("--log", help="training-log CSV path (default training_log.csv)")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="score a checkpoint on a corpus")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--task", required=True, choices=TASKS)
    p_eval.add_argument("--corpus", help="corpus path (or use --config with --split)")
    p_eval.add_argument("--config", help="config file naming train/valid/test paths")
    p_eval.add_argument("--split", choices=("train", "valid", "test"))
    p_eval.add_argument("--ere-regime", choices=(PLUS_JOINT, ALL_JOINT), dest="ere_regime",
                        help="per-family or pooled relation reports (task ere only)")
    p_eval.add_argument("--energy-inference", action="store_true", dest="energy_inference",
                        help="predict by minimizing the energies instead of reading the heads")
    p_eval.add_argument("--json", action="store_true", help="emit the report as JSON")
    p_eval.set_defaults(func=cmd_eval)

    p_pred = sub.add_parser("predict", help="emit JSONL predictions")
    p_pred.add_argument("--checkpoint", required=True)
    p_pred.add_argument("--corpus", required=True)
    p_pred.add_argument("--task", required=True, choices=TASKS)
    p_pred.add_argument("--out", help="output path (default stdout)")
    p_pred.set_defaults(func=cmd_predict)

    p_synth = sub.add_parser("synth", help="generate a synthetic JSONL corpus")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--docs", type=int, default=200)
    p_synth.add_argument("--classes", type=int, default=5)
    p_synth.add_argument("--relations", type=int, default=4)
    p_synth.add_argument("--vocab", type=int, default=100)
    p_synth.add_argument("--mentions-per-doc", type=int, default=6, dest="mentions_per_doc")
    p_synth.add_argument("--seed", type=int, default=7)
    p_synth.set_defaults(func=cmd_synth)

    p_plot_e = sub.add_parser("plot-energy", help="plot per-level loss curves from a training log")
    p_plot_e.add_argument("--log", required=True)
    p_plot_e.add_argument("--out", required=True, help="image path (.svg or .png)")
    p_plot_e.set_defaults(func=cmd_plot_energy)

    p_plot_s = sub.add_parser("plot-sphere", help="project one class sphere and its mentions to 2-D")
    p_plot_s.add_argument("--checkpoint", required=True)
    p_plot_s.add_argument("--corpus", required=True)
    p_plot_s.add_argument("--class", required=True, dest="class_name")
    p_plot_s.add_argument("--out", required=True, help="image path (.svg or .png)")
    p_plot_s.set_defaults(func=cmd_plot_sphere)

    return parser


def _resolve_corpus_path(args, key: str) -> str:
    if getattr(args, "corpus", None):
        return args.corpus
    if args.config and getattr(args, "split", None):
        paths = parse_flat_config(args.config)
        config_key = f"{args.split}_path"
        if config_key not in paths:
            raise FileNotFoundError(f"config {args.config} has no {config_key} entry")
        return paths[config_key]
    if args.config:
        paths = parse_flat_config(args.config)
        if key in paths:
            return paths[key]
    raise FileNotFoundError("no corpus given: pass --corpus, or --config with --split")


def cmd_train(args) -> int:
    config = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    if args.regime is not None:
        config.regime = args.regime
    if args.seed is not None:
        config.seed = args.seed
    if args.mention_cap is not None:
        config.mention_cap = args.mention_cap
    corpus_path = _resolve_corpus_path(args, "train_path")
    documents, spaces, stats = load_corpus(corpus_path, max_len=config.max_len)
    checkpoint, log = train(documents, spaces, config)

    file_paths = parse_flat_config(args.config) if args.config else {}
    out = args.out or file_paths.get("checkpoint_path", "model.ckpt")
    log_path = args.log or file_paths.get("log_path", "training_log.csv")
    checkpoint.save(out)
    log.write_csv(log_path)
    print(f"trained on {stats.document_count} documents / {stats.mention_count} mentions")
    print(f"checkpoint: {out}")
    print(f"training log: {log_path}")
    return 0


def cmd_eval(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    corpus_path = _resolve_corpus_path(args, "valid_path")
    documents, _, _ = load_corpus(corpus_path, spaces=checkpoint.spaces, max_len=checkpoint.max_len)
    if args.task == ERE_TASK and args.ere_regime:
        pred, gold = collect_predictions(
            checkpoint, documents, energy_inference=args.energy_inference
        )[ERE_TASK]
        reports = ere_regime_eval(
            pred, gold, checkpoint.spaces.relations, args.ere_regime, checkpoint.spaces.na_index
        )
    else:
        reports = [evaluate(checkpoint, documents, args.task, energy_inference=args.energy_inference)]
    print(reports_to_json(reports) if args.json else format_table(reports))
    return 0


def cmd_predict(args) -> int:
    checkpoint = Checkpoint.load(args.checkpoint)
    documents, _, _ = load_corpus(args.corpus, spaces=checkpoint.spaces, max_len=checkpoint.max_len)
    records = predict_records(checkpoint, documents, args.task)
    lines = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)
    if args.out:
        Path(args.out).write_text(lines, encoding="utf-8")
        print(f"wrote {len(records)} predictions to {args.out}")
    else:
        sys.stdout.write(lines)
    return 0


def cmd_synth(args) -> int:
    documents, spaces = synthesize_corpus(
        args.docs, args.classes, args.relations, args.vocab, args.mentions_per_doc, args.seed
    )
    write_corpus(documents, spaces, args.out)
    print(f"wrote {len(documents)} documents to {args.out}")
    return 0


def cmd_plot_energy(args) -> int:
    from .plots import plot_energy_curves

    log = TrainingLog.read_csv(args.log)
    plot_energy_curves(log, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_plot_sphere(args) -> int:
    from .plots import plot_class_sphere

    checkpoint = Checkpoint.load(args.checkpoint)
    documents, _, _ = load_corpus(args.corpus, spaces=checkpoint.spaces, max_len=checkpoint.max_len)
    stats = plot_class_sphere(checkpoint, documents, args.class_name, args.out)
    print(f"wrote {args.out}")
    print(
        f"mean hinge distance: own centroid {stats['mean_hinge_own']:.4f}, "
        f"nearest other {stats['mean_hinge_nearest_other']:.4f} "
        f"({100 * stats['fraction_closer']:.1f}% of mentions closer to their own)"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, CheckpointError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
