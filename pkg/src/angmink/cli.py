"""Command line entry point: ingest, sweep, classify, eval, best."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .classifiers import FAMILIES, WEIGHT_KINDS, ClassifierSpec, ScoreMatrix, score_all
from .corpus import dataset_pair, ingest, load_corpus, load_counted, save_counted
from .evaluation import multiclass_auroc, ovr_macro_auroc
from .harness import SweepConfig, best_cells, read_results, run_sweep


def _cmd_ingest(args: argparse.Namespace) -> int:
    train = load_corpus(args.train, args.format, "train")
    test = load_corpus(args.test, args.format, "test")
    counted_train, counted_test = ingest(train, test)
    save_counted(args.out, counted_train, counted_test)
    print(f"ingested {len(counted_train)} train / {len(counted_test)} test documents -> {args.out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    if args.config:
        config = SweepConfig.from_json(args.config, data=args.data, out=args.out)
    else:
        config = SweepConfig(data=Path(args.data), out=Path(args.out))
    rows = run_sweep(config)
    print(f"wrote {len(rows)} rows -> {args.out}")
    return 0


def _cmd_classify(args: argparse.Namespace) -> int:
    train_c, test_c = load_counted(args.data)
    train, test = dataset_pair(train_c, test_c, args.m)
    spec = ClassifierSpec.build(args.family, args.k, args.weights, args.p, args.rootless)
    scores = score_all(test, train, spec, threads=args.threads)
    if args.scores_out:
        scores.to_csv(args.scores_out)
    if args.labels_out:
        _write_labels(args.labels_out, scores.instance_ids, test.labels)
    result = multiclass_auroc(scores, test.labels)
    print(f"auroc={result.auroc:.6f} auroc_ovr={ovr_macro_auroc(scores, test.labels):.6f}")
    return 0


def _write_labels(path: str, ids, labels) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_id", "label"])
        w.writerows(zip(ids, labels))


def _read_labels(path: str) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {rec["instance_id"]: rec["label"] for rec in csv.DictReader(fh)}


def _cmd_eval(args: argparse.Namespace) -> int:
    scores = ScoreMatrix.from_csv(args.scores)
    by_id = _read_labels(args.labels)
    missing = [i for i in scores.instance_ids if i not in by_id]
    if missing:
        raise ValueError(f"no label for instances: {', '.join(missing[:5])}")
    labels = [by_id[i] for i in scores.instance_ids]
    result = multiclass_auroc(scores, labels)
    print(f"auroc={result.auroc:.6f} auroc_ovr={ovr_macro_auroc(scores, labels):.6f}")
    return 0


def _cmd_best(args: argparse.Namespace) -> int:
    rows = read_results(args.results)
    for cell in best_cells(rows, args.weights, args.k, args.m, args.rootless):
        print(f"{cell.family}\tp={cell.p:.1f}\tauroc={cell.auroc:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="angmink", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="tokenize a train/test corpus into a dataset file")
    p.add_argument("--format", choices=["dir", "jsonl"], required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("sweep", help="run a hyperparameter grid and write results CSV")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("classify", help="score the test split with one classifier")
    p.add_argument("--data", required=True)
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--weights", choices=WEIGHT_KINDS, required=True)
    p.add_argument("--rootless", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--scores-out")
    p.add_argument("--labels-out")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("eval", help="multiclass AUROC of a score CSV")
    p.add_argument("--scores", required=True)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("best", help="best p per family on a fixed slice of a results CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--weights", choices=WEIGHT_KINDS, default="linear")
    p.add_argument("--k", type=int, default=256)
    p.add_argument("--m", type=int, default=4096)
    p.add_argument("--rootless", action="store_true")
    p.set_defaults(func=_cmd_best)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
