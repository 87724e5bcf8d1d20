"""Command-line drivers for the desk-scale experiment suite.

Every subcommand is deterministic for fixed flags and seed, writes plain
CSV/JSON/PGM artifacts, exits 0 on success, and prints a single
``error: ...`` line to stderr otherwise.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import data, experiments
from .experiments import (
    ImageNetConfig,
    SurveyConfig,
    build_image_net,
    load_mnist,
    neuron_from_json,
    pgm_bytes,
    raster_neuron,
    run_entropy_dynamics,
    run_image_spectrum,
    run_survey,
    sharp_vs_flat_json,
    taiji_csv,
    write_text,
)
from .training import TrainConfig, evaluate, train


def _parse_arch(text: str) -> tuple:
    try:
        widths = tuple(int(part) for part in text.split("-"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad architecture {text!r}; expected like 2-6-6-1")
    if len(widths) < 2:
        raise argparse.ArgumentTypeError("architecture needs at least two widths")
    return widths


def _parse_schedule(text: str) -> tuple:
    segments = []
    try:
        for part in text.split(","):
            steps, rate = part.split(":")
            segments.append((int(steps), float(rate)))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"bad schedule {text!r}; expected comma-separated step:rate pairs")
    return tuple(segments)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one-line machine-parseable failure instead of usage + error
        self.exit(2, f"error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="quadnet",
        description="quadratic-network training and spectral-fingerprint experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-taiji", help="write the Tai Ji grid dataset as CSV")
    p.add_argument("--grid-r", type=int, default=20,
                   help="grid reciprocal R; step is 1/R (default 20)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train one quadratic MLP on the Tai Ji set")
    p.add_argument("--arch", type=_parse_arch, default=(2, 6, 6, 1))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--lr-schedule", type=_parse_schedule, default=((1000, 0.004),))
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--loss", default="mse",
                   choices=("mse", "binary_cross_entropy"))
    p.add_argument("--grid-r", type=int, default=20)
    p.add_argument("--out", required=True)

    p = sub.add_parser("survey", help="survey good minima over repeated seeded trainings")
    p.add_argument("--arch", type=_parse_arch, default=(2, 6, 6, 1))
    p.add_argument("--target", type=int, default=56)
    p.add_argument("--threshold", type=float, default=experiments.GOOD_MINIMUM_THRESHOLD)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--lr-schedule", type=_parse_schedule, default=((1000, 0.004),))
    p.add_argument("--sigma", type=float, default=0.3)
    p.add_argument("--loss", default="mse", choices=("mse", "binary_cross_entropy"))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-attempts", type=int, default=0, help="0 picks 40*target")
    p.add_argument("--epsilon-rel", type=float, default=1e-6)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sharp-vs-flat",
                       help="split a survey report into top-k versus remaining spectra")
    p.add_argument("--report", required=True, help="survey JSON file")
    p.add_argument("--k", type=int, default=7)
    p.add_argument("--out", required=True)

    p = sub.add_parser("entropy-dynamics",
                       help="track per-layer type entropy during one conv training run")
    p.add_argument("--images", help="IDX image file (defaults to MNIST train images)")
    p.add_argument("--labels", help="IDX label file")
    p.add_argument("--data-dir", help=f"IDX directory (or ${experiments.MNIST_DIR_ENV})")
    p.add_argument("--subset", type=int, default=10000)
    p.add_argument("--kernels", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--lr-schedule", type=_parse_schedule, default=((2500, 0.05), (97500, 0.02)))
    p.add_argument("--cadence", type=int, default=400)
    p.add_argument("--epsilon-rel", type=float, default=1e-6)
    p.add_argument("--mode", choices=("full", "simplified"), default="simplified")
    p.add_argument("--out", required=True)

    p = sub.add_parser("raster", help="rasterize a decision boundary to a PGM image")
    p.add_argument("--preset", choices=sorted(experiments.RASTER_PRESETS))
    p.add_argument("--params", help="JSON file with w_r, w_g, w_b, b_r, b_g, c")
    p.add_argument("--resolution", type=int, default=64)
    p.add_argument("--out", required=True)

    p = sub.add_parser("mnist-spectrum",
                       help="train the desk-scale conv net and histogram its gate types")
    p.add_argument("--data-dir", help=f"IDX directory (or ${experiments.MNIST_DIR_ENV})")
    p.add_argument("--subset", type=int, default=10000)
    p.add_argument("--kernels", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--lr-schedule", type=_parse_schedule, default=((2500, 0.05), (97500, 0.02)))
    p.add_argument("--epsilon-rel", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    return parser


def _cmd_gen_taiji(args) -> int:
    write_text(args.out, taiji_csv(data.gen_taiji(args.grid_r)))
    return 0


def _cmd_train(args) -> int:
    from .network import build_mlp

    dataset = data.gen_taiji(args.grid_r)
    net = build_mlp(args.arch)
    config = TrainConfig(seed=args.seed, iterations=args.iters,
                         lr_schedule=args.lr_schedule, sigma=args.sigma,
                         loss=args.loss, reduction="sum")
    quarter = max(args.iters // 4, 1)
    checkpoints = sorted({quarter, 2 * quarter, 3 * quarter, args.iters})
    report = train(net, dataset, config, checkpoints=checkpoints)
    accuracy, error = evaluate(net, dataset)
    doc = {
        "arch": list(args.arch),
        "seed": args.seed,
        "steps": report.steps,
        "final_loss": report.final_loss,
        "train_accuracy": accuracy,
        "train_error": error,
        "history": [{"step": s, "loss": l, "accuracy": a} for s, l, a in report.history],
    }
    write_text(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def _cmd_survey(args) -> int:
    config = SurveyConfig(arch=args.arch, target=args.target, threshold=args.threshold,
                          iterations=args.iters, lr_schedule=args.lr_schedule,
                          base_seed=args.seed, sigma=args.sigma, loss=args.loss,
                          eps_rel=args.epsilon_rel, max_attempts=args.max_attempts,
                          workers=args.workers)
    report = run_survey(config)
    write_text(args.out, report.to_json())
    if not report.complete:
        print(f"warning: only {len(report.records)} of {config.target} good minima "
              f"after {report.attempted} attempts; report flagged incomplete", file=sys.stderr)
    return 0


def _cmd_sharp_vs_flat(args) -> int:
    with open(args.report) as fh:
        doc = json.load(fh)
    write_text(args.out, sharp_vs_flat_json(doc, args.k))
    return 0


def _load_image_data(args):
    if args.images or args.labels:
        if not (args.images and args.labels):
            raise ValueError("--images and --labels must be given together")
        return data.load_idx_files(args.images, args.labels)
    train_set, _ = load_mnist(args.data_dir)
    return train_set


def _cmd_entropy_dynamics(args) -> int:
    dataset = _load_image_data(args)
    if args.subset and len(dataset) > args.subset:
        dataset = data.LabeledDataset(dataset.x[:args.subset],
                                      dataset.labels[:args.subset], dataset.n_classes)
    net_config = ImageNetConfig(kernels=args.kernels, seed=args.seed,
                                iterations=args.iters, lr_schedule=args.lr_schedule)
    net = build_image_net(dataset.x.shape[1:], net_config)
    config = TrainConfig(seed=args.seed, iterations=args.iters,
                         lr_schedule=args.lr_schedule, batch_size=net_config.batch_size,
                         init="truncated_gaussian", sigma=net_config.sigma,
                         loss="cross_entropy", reduction="mean")
    series = run_entropy_dynamics(net, dataset, config, cadence=args.cadence,
                                  eps_rel=args.epsilon_rel, mode=args.mode)
    write_text(args.out, series.to_csv())
    return 0


def _cmd_raster(args) -> int:
    if bool(args.preset) == bool(args.params):
        raise ValueError("give exactly one of --preset or --params")
    if args.preset:
        neuron = experiments.RASTER_PRESETS[args.preset]()
    else:
        with open(args.params) as fh:
            neuron = neuron_from_json(json.load(fh))
    image = raster_neuron(neuron, args.resolution)
    with open(args.out, "wb") as fh:
        fh.write(pgm_bytes(image))
    return 0


def _cmd_mnist_spectrum(args) -> int:
    train_set, test_set = load_mnist(args.data_dir)
    config = ImageNetConfig(kernels=args.kernels, seed=args.seed,
                            iterations=args.iters, lr_schedule=args.lr_schedule,
                            train_subset=args.subset, eps_rel=args.epsilon_rel)
    result = run_image_spectrum(train_set, test_set, config)
    write_text(args.out, result.to_csv())
    print(f"train accuracy {result.train_accuracy:.4f}  "
          f"test accuracy {result.test_accuracy:.4f}")
    return 0


_COMMANDS = {
    "gen-taiji": _cmd_gen_taiji,
    "train": _cmd_train,
    "survey": _cmd_survey,
    "sharp-vs-flat": _cmd_sharp_vs_flat,
    "entropy-dynamics": _cmd_entropy_dynamics,
    "raster": _cmd_raster,
    "mnist-spectrum": _cmd_mnist_spectrum,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
