"""Train a classifier on a generated manifest and report its test error."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsn-trainer", description=__doc__)
    parser.add_argument("--train-manifest", required=True)
    parser.add_argument("--test-manifest", required=True)
    parser.add_argument("--model", choices=("dsn", "cnn"), default="dsn")
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--learning-rate", type=float, default=0.01)
    parser.add_argument("--momentum", type=float, default=0.9)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="runs", help="output directory for reports")
    parser.add_argument("--paper-scale", action="store_true",
                        help="use the full-scale recipe (lr 0.06, batch 500, 500 epochs)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    from .data import num_classes, read_manifest
    from .evaluation import evaluate, save_confusion_csv, save_report_json
    from .models import build_cnn_baseline, build_dsn
    from .training import TrainConfig, train

    try:
        rows = read_manifest(args.train_manifest)
        classes = num_classes(rows)
        if args.paper_scale:
            config = TrainConfig(seed=args.seed)
        else:
            config = TrainConfig(
                learning_rate=args.learning_rate,
                momentum=args.momentum,
                batch_size=args.batch_size,
                epochs=args.epochs,
                seed=args.seed,
            )
        build = build_dsn if args.model == "dsn" else build_cnn_baseline
        import torch

        torch.manual_seed(config.seed)  # covers weight init; train() reseeds for shuffling
        model = build(classes)

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        model, _ = train(model, args.train_manifest, config,
                         loss_csv_path=out / f"{args.model}_loss.csv")
        report = evaluate(model, args.test_manifest, train_manifest=args.train_manifest,
                          input_size=config.input_size, resize_policy=config.resize_policy)
        save_report_json(report, out / f"{args.model}_report.json")
        save_confusion_csv(report, out / f"{args.model}_confusion.csv")
        print(f"{args.model} test_error={report.error_rate:.4f} n={report.n_test}")
        return 0
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
