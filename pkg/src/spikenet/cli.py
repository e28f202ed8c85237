"""Command-line interface: train, eval, bench, grid, inspect."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import SpikenetError
from .model_io import load_model
from .pipeline import (
    load_datasets,
    run_bench,
    run_eval,
    run_train,
    threshold_grid_search,
)
from .tensor import count_ones, unpack


def _parse_grids(text: str):
    grids = []
    for part in text.split(";"):
        values = [float(v) for v in part.replace(",", " ").split()]
        grids.append(values)
    return grids


def cmd_train(args) -> int:
    config = load_config(args.config)
    result = run_train(config, args.out, seed=args.seed, log_dir=args.log_dir)
    print(f"wrote model to {args.out}")
    print(f"test accuracy: {result.accuracy:.4f}")
    for name, seconds in result.timings.items():
        print(f"  t_{name}: {seconds:.2f}s")
    return 0


def cmd_eval(args) -> int:
    config = load_config(args.config)
    acc, timings = run_eval(config, args.model)
    print(f"accuracy: {acc:.4f}")
    for name, seconds in timings.items():
        print(f"  t_{name}: {seconds:.2f}s")
    return 0


def cmd_bench(args) -> int:
    config = load_config(args.config)
    stats, rows = run_bench(config, repeats=args.repeats, out_csv=args.out)
    print(f"{len(rows)} runs -> {args.out}")
    print(f"accuracy: {stats.accuracy_mean:.4f} +/- {stats.accuracy_sd:.4f} (SD)")
    print(f"time:     {stats.time_mean:.2f}s +/- {stats.time_sd:.2f}s (SD)")
    return 0


def cmd_grid(args) -> int:
    config = load_config(args.config)
    grids = _parse_grids(args.thresholds)
    train, test = load_datasets(config)
    train_subset = train.take(args.train_n)
    val_subset = test.take(args.val_n) if args.val_from_test \
        else train.subset(np.arange(len(train)) >= len(train) - args.val_n)
    best = threshold_grid_search(grids, train_subset, val_subset, config)
    print("best thresholds: " + " ".join(f"{v:g}" for v in best))
    return 0


def cmd_inspect(args) -> int:
    model = load_model(args.model)
    print(f"mode: {model.mode}, steps: {model.steps}, cutoff: {model.cutoff:g}")
    print("sigmas: " + ", ".join(f"{s:g}" for s in model.sigmas))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for idx, layer in enumerate(model.layers, start=1):
        ones = count_ones(layer.weights)
        total = layer.out_channels * layer.in_channels * layer.kh * layer.kw
        print(
            f"layer{idx}: [{layer.out_channels},{layer.in_channels},"
            f"{layer.kh},{layer.kw}] stride {layer.stride} pad {layer.pad} "
            f"pool {layer.pool_window} threshold {layer.threshold:g} "
            f"ones {ones}/{total} ({ones / total:.1%})"
        )
        _write_kernel_mosaic(out_dir / f"layer{idx}.pgm", layer)
        print(f"  kernels -> {out_dir / f'layer{idx}.pgm'}")
    k = model.pca.components.shape[0]
    print(f"pca: {k} components, "
          f"top eigenvalue {model.pca.explained_variance[0]:.4g}")
    print(f"classifier: {model.svm.classes} classes"
          + (", rff front" if model.rff is not None else ""))
    return 0


def _write_kernel_mosaic(path, layer) -> None:
    """Binary kernels as a PGM grid: rows = output channels, cols = inputs."""
    from .data import write_pnm

    w = unpack(layer.weights)  # [out, in, kh, kw]
    out_c, in_c, kh, kw = w.shape
    gap = 1
    height = out_c * (kh + gap) - gap
    width = in_c * (kw + gap) - gap
    mosaic = np.full((height, width), 0.5)
    for o in range(out_c):
        for i in range(in_c):
            y = o * (kh + gap)
            x = i * (kw + gap)
            mosaic[y:y + kh, x:x + kw] = w[o, i]
    write_pnm(path, mosaic)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spikenet",
        description="Spiking convolutional network: STDP training, timed "
                    "readout, PCA + linear classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--log-dir", default=None,
                   help="write per-layer STDP training logs (CSV) here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model")
    p.add_argument("--config", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="repeat train+eval cycles and report stats")
    p.add_argument("--config", required=True)
    p.add_argument("--repeats", type=int, default=30)
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("grid", help="grid-search conv thresholds")
    p.add_argument("--config", required=True)
    p.add_argument("--thresholds", required=True,
                   help="per-layer grids, e.g. '5,10,15;30,60'")
    p.add_argument("--train-n", type=int, default=2000)
    p.add_argument("--val-n", type=int, default=500)
    p.add_argument("--val-from-test", action="store_true",
                   help="take the validation subset from the test split "
                        "instead of the tail of the train split")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("inspect", help="dump model summary and kernel mosaics")
    p.add_argument("--model", required=True)
    p.add_argument("--out", default="inspect",
                   help="directory for PGM kernel mosaics")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpikenetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
