"""Command-line entry point.

Exit codes:
  0  success
  1  unexpected internal error
  2  usage error (unknown flag, bad value)
  3  missing input path
  4  invalid dataset, config or checkpoint
  5  degenerate input (zero-norm vector)
  6  training diverged (NaN/Inf objective)
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import DatasetError, SynthConfig, generate_synthetic, load_dataset, save_dataset
from .evaluator import evaluate
from .inference import format_table, semantic_report, to_csv
from .model import load_checkpoint, save_checkpoint
from .relations import DegenerateVectorError
from .trainer import TrainingDiverged, grid_search, load_config, train

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_MISSING, EXIT_INVALID, EXIT_DEGENERATE, EXIT_DIVERGED = range(7)

log = logging.getLogger("semzsl")


def _floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semzsl",
        description="Zero-shot learning with semantic-relation preserving embeddings.",
        epilog="exit codes: 0 ok, 1 internal error, 2 usage, 3 missing path, "
               "4 invalid data/config/checkpoint, 5 degenerate vector, 6 training diverged",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="write a synthetic dataset directory")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--classes-seen", type=int, default=15)
    p.add_argument("--classes-unseen", type=int, default=5)
    p.add_argument("--attr-dim", type=int, default=16)
    p.add_argument("--feat-dim", type=int, default=64)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--val-classes", type=int, default=0,
                   help="seen classes held out entirely for validation (0: hold out samples instead)")
    p.add_argument("--seed", type=int, default=0)

    def train_flags(p):
        p.add_argument("--mode", choices=["proposed", "b1", "b2", "b3"])
        p.add_argument("--tau", help="similarity threshold or 'auto'")
        p.add_argument("--lambda1", type=float)
        p.add_argument("--lambda2", type=float)
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch", type=int, dest="batch_size")
        p.add_argument("--lr", type=float)
        p.add_argument("--weight-decay", type=float)
        p.add_argument("--p", type=int, help="mining candidates per relation")
        p.add_argument("--hidden", help="encoder hidden sizes, e.g. 512,1024")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)

    p = sub.add_parser("train", help="train a model; writes CKPT and CKPT.log.csv")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--log", type=Path, help="TrainLog CSV path (default: OUT.log.csv)")
    train_flags(p)

    p = sub.add_parser("eval", help="evaluate a checkpoint; writes FILE and FILE.csv")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--ckpt", required=True, type=Path)
    p.add_argument("--generalized", action="store_true")
    p.add_argument("--topk", type=int, action="append", default=[])
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("infer", help="semantic report for one feature row")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--ckpt", required=True, type=Path)
    p.add_argument("--feature-row", required=True, type=int)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--top", type=int)
    p.add_argument("--exclude-class", type=int, action="append", default=[],
                   help="drop a class from the known set (simulates a missing embedding)")
    p.add_argument("--out", type=Path, help="optional CSV output")

    p = sub.add_parser("grid-search", help="validation grid over tau, lambda1, lambda2")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--tau-grid", required=True, nargs="+")
    p.add_argument("--l1-grid", required=True, nargs="+")
    p.add_argument("--l2-grid", required=True, nargs="+")
    p.add_argument("--out", required=True, type=Path)
    train_flags(p)
    return parser


def _overrides(args) -> dict:
    keys = ("mode", "tau", "lambda1", "lambda2", "epochs", "batch_size", "lr", "weight_decay",
            "p", "hidden", "seed", "workers")
    return {k: getattr(args, k, None) for k in keys}


def _require(path: Path):
    if path is not None and not path.exists():
        raise FileNotFoundError(f"no such file or directory: {path}")


def cmd_gen_synth(args) -> None:
    cfg = SynthConfig(args.classes_seen, args.classes_unseen, args.attr_dim, args.feat_dim,
                      args.per_class, args.noise, args.seed, val_classes=args.val_classes)
    ds = generate_synthetic(cfg)
    save_dataset(ds, args.out)
    print(f"wrote {ds.n_samples} samples, {ds.n_classes} classes to {args.out}")


def cmd_train(args) -> None:
    _require(args.config)
    cfg = load_config(args.config, **_overrides(args))
    ds = load_dataset(args.data)
    ckpt, tlog = train(ds, cfg)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(args.out, ckpt)
    log_path = args.log or args.out.with_name(args.out.name + ".log.csv")
    log_path.write_text(tlog.to_csv())
    args.out.with_name(args.out.name + ".cfg").write_text(cfg.replace(tau=tlog.tau).to_text())
    print(cfg.to_text(), end="")
    print(f"best epoch {tlog.best_epoch}, validation accuracy {tlog.best_val_acc:.4f}")
    print(f"wrote {args.out} and {log_path}")


def cmd_eval(args) -> None:
    ds = load_dataset(args.data)
    _require(args.ckpt)
    ckpt = load_checkpoint(args.ckpt)
    report = evaluate(ckpt, ds, generalized=args.generalized, topk=args.topk)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    report.write(args.out, ds.class_names)
    print(report.to_text(), end="")


def cmd_infer(args) -> None:
    ds = load_dataset(args.data)
    _require(args.ckpt)
    ckpt = load_checkpoint(args.ckpt)
    if not 0 <= args.feature_row < ds.n_samples:
        raise IndexError(f"feature row {args.feature_row} outside [0, {ds.n_samples})")
    known = np.setdiff1d(np.arange(ds.n_classes), args.exclude_class)
    entries = semantic_report(ckpt, ds.features[args.feature_row], ds.class_embeddings, known,
                              tau=args.tau, names=ds.class_names, top=args.top)
    print(format_table(entries), end="")
    if args.out:
        args.out.write_text(to_csv(entries))


def cmd_grid_search(args) -> None:
    _require(args.config)
    cfg = load_config(args.config, **_overrides(args))
    ds = load_dataset(args.data)
    taus = [t for g in args.tau_grid for t in _floats(g)]
    l1s = [t for g in args.l1_grid for t in _floats(g)]
    l2s = [t for g in args.l2_grid for t in _floats(g)]
    result = grid_search(ds, cfg, taus, l1s, l2s)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(result.to_csv())
    best_path = args.out.with_name(args.out.name + ".best.cfg")
    best_path.write_text(result.best.to_text())
    print(result.to_csv(), end="")
    print(f"best: tau={result.best.tau} lambda1={result.best.lambda1} lambda2={result.best.lambda2} "
          f"(validation accuracy {result.best_score:.4f}); config written to {best_path}")


COMMANDS = {
    "gen-synth": cmd_gen_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "infer": cmd_infer,
    "grid-search": cmd_grid_search,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except DegenerateVectorError as exc:
        print(f"error: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DatasetError, ValueError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def main() -> None:
    sys.exit(run())
