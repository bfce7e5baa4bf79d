"""Command-line entry points: generate, train, trials, eval, columns."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .harness import (
    ExperimentConfig,
    evaluate,
    generate_dataset,
    file_sha256,
    load_dataset,
    run_trials,
    train_baseline,
    train_hybrid,
    write_dataset,
    write_metrics_csv,
)


def _load_config(path: str | None, **overrides) -> ExperimentConfig:
    d = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    d.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(d)


def cmd_generate(args) -> int:
    config = _load_config(
        args.config,
        scene_path=args.scene, target=args.target, m=args.m,
        sampling_mode=args.mode, dataset_seed=args.seed,
    )
    records = generate_dataset(config)
    write_dataset(records, args.out)
    n_train = sum(1 for r in records if r.split == "train")
    print(f"wrote {len(records)} records ({n_train} train / "
          f"{len(records) - n_train} test) to {args.out}")
    return 0


def cmd_train(args) -> int:
    config = _load_config(args.config, model=args.model)
    os.makedirs(args.out, exist_ok=True)
    records = load_dataset(args.dataset)
    scene = config.load_scene()
    omega = 2.0 * math.pi * scene.carrier_frequency
    train_fn = train_hybrid if config.model == "hybrid" else train_baseline
    seed = config.trial_seeds[0]
    checkpoint, rows = train_fn(config, records, omega, seed)
    checkpoint["dataset_sha256"] = file_sha256(args.dataset)
    cp_path = os.path.join(args.out, "checkpoint.json")
    with open(cp_path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint, fh)
        fh.write("\n")
    metrics_path = os.path.join(args.out, "metrics.csv")
    write_metrics_csv([rows], metrics_path)
    last = rows[-1]
    print(f"trained {config.model} for {config.epochs} epochs "
          f"(seed {seed}): final train loss {last.train_loss_mean:.4f}, "
          f"test accuracy {last.test_accuracy:.4f}")
    print(f"checkpoint: {cp_path}\nmetrics: {metrics_path}")
    return 0


def cmd_trials(args) -> int:
    config = _load_config(args.config)
    out = run_trials(config, args.out)
    print(f"dataset: {out['dataset']}")
    for cp in out["checkpoints"]:
        print(f"checkpoint: {cp}")
    print(f"metrics: {out['metrics']}")
    return 0


def cmd_eval(args) -> int:
    row = evaluate(args.checkpoint, args.dataset)
    print(json.dumps(row))
    return 0


def cmd_columns(args) -> int:
    """Reshape the metrics CSV into gnuplot-ready whitespace columns:
    epoch, one column per trial, mean, var."""
    with open(args.metrics, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        col = header.index(args.metric)
        by_epoch: dict[int, dict[str, str]] = {}
        for line in fh:
            parts = line.strip().split(",")
            by_epoch.setdefault(int(parts[0]), {})[parts[1]] = parts[col]
    trials = sorted(k for k in next(iter(by_epoch.values())) if k.isdigit())
    print("# epoch " + " ".join(f"trial{t}" for t in trials) + " mean var")
    for epoch in sorted(by_epoch):
        row = by_epoch[epoch]
        print(" ".join([str(epoch)] + [row[t] for t in trials]
                       + [row["mean"], row["var"]]))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qrfsense",
        description="Quantum RF sensing experiments: multipath ray tracing, "
                    "a variational sensing probe, and an LSTM benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="trace a labeled multipath dataset")
    p.add_argument("--scene", default="canonical",
                   help="scene JSON path, or 'canonical' for the bundled scene")
    p.add_argument("--target", default="target_a")
    p.add_argument("--m", type=int, default=2000)
    p.add_argument("--mode", choices=("uniform", "balanced"), default="balanced")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="optional config JSON for radio constants")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("train", help="train one model on an existing dataset")
    p.add_argument("--model", choices=("hybrid", "lstm"), default=None)
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("trials", help="dataset + independent trials + metrics CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_trials)

    p = sub.add_parser("eval", help="score a checkpoint on a dataset's test split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("columns", help="gnuplot-ready columns for one metric")
    p.add_argument("--metrics", required=True)
    p.add_argument("--metric", default="test_accuracy",
                   choices=("train_loss_mean", "train_loss_accrued",
                            "test_loss", "test_accuracy"))
    p.set_defaults(fn=cmd_columns)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
