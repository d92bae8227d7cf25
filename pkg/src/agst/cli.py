"""Command-line interface: run, sweep, convert, gradcheck."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .data import DatasetFormatError, convert_content_release
from .experiments import (
    METHODS,
    PROTOCOLS,
    SWEEP_AXES,
    ExperimentSpec,
    run_experiment,
    run_sweep,
    write_sweep_csv,
)
from .gradcheck import run_gradcheck_suite
from .mlp import TrainConfig
from .propagation import LpConfig
from .rewiring import AugmentConfig
from .selftrain import AgstConfig

log = logging.getLogger(__name__)


def _positive_int(raw: str) -> int:
    value = int(raw)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _unit_open_float(raw: str) -> float:
    value = float(raw)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {value}")
    return value


def _add_experiment_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--dataset", required=True, help="dataset directory")
    sub.add_argument("--protocol", choices=PROTOCOLS, default="balanced")
    sub.add_argument("--k", type=_positive_int, default=5, help="labeled nodes per class")
    sub.add_argument("--rate", type=_unit_open_float, default=0.01,
                     help="label rate for the imbalanced protocol")
    sub.add_argument("--method", choices=METHODS, default="agst")
    sub.add_argument("--runs", type=_positive_int, default=20)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--workers", type=_positive_int, default=1)
    sub.add_argument("--val-per-class", type=_positive_int, default=30)
    sub.add_argument("--config", default=None, metavar="FILE",
                     help="key = value file; command-line flags override it")
    # hyperparameters
    sub.add_argument("--alpha", type=float, default=0.9)
    sub.add_argument("--steps", type=_positive_int, default=10)
    sub.add_argument("--tau", type=float, default=0.5)
    sub.add_argument("--momentum", type=float, default=0.999)
    sub.add_argument("--lambda1", type=float, default=1.0)
    sub.add_argument("--lambda2", type=float, default=0.1)
    sub.add_argument("--beta-add", type=float, default=0.4)
    sub.add_argument("--beta-remove", type=float, default=0.1)
    sub.add_argument("--iterations", type=_positive_int, default=3)
    sub.add_argument("--lr", type=float, default=0.01)
    sub.add_argument("--weight-decay", type=float, default=5e-4)
    sub.add_argument("--dropout", type=float, default=0.5)
    sub.add_argument("--patience", type=int, default=100)
    sub.add_argument("--max-epochs", type=_positive_int, default=10_000)
    sub.add_argument("--no-val-epochs", type=_positive_int, default=300)
    sub.add_argument("--hidden", type=_positive_int, default=64)
    sub.add_argument("--loss-reduction", choices=("mean", "sum"), default="mean")
    sub.add_argument("--normalize-features", action="store_true")
    sub.add_argument("--warm-start", action="store_true")
    sub.add_argument("--best-iteration", action="store_true",
                     help="report the best-validation iteration instead of the last")


def _config_from_args(args: argparse.Namespace) -> AgstConfig:
    return AgstConfig(
        lp=LpConfig(alpha=args.alpha, steps=args.steps),
        train=TrainConfig(
            tau=args.tau, momentum=args.momentum,
            lambda1=args.lambda1, lambda2=args.lambda2,
            learning_rate=args.lr, weight_decay=args.weight_decay,
            dropout=args.dropout, patience=args.patience,
            max_epochs=args.max_epochs, no_val_epochs=args.no_val_epochs,
            hidden=args.hidden, loss_reduction=args.loss_reduction,
            normalize_features=args.normalize_features,
        ),
        augment=AugmentConfig(beta_add=args.beta_add, beta_remove=args.beta_remove),
        iterations=args.iterations,
        seed=args.seed,
        warm_start=args.warm_start,
        report_best_iteration=args.best_iteration,
    )


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    return ExperimentSpec(
        dataset=args.dataset, protocol=args.protocol, k=args.k, rate=args.rate,
        runs=args.runs, method=args.method, config=_config_from_args(args),
        seed=args.seed, workers=args.workers, val_per_class=args.val_per_class,
        output=getattr(args, "output", None),
    )


def _load_config_file(path: str) -> list[str]:
    """Turn ``key = value`` lines into flag tokens; booleans are true/false."""
    extra: list[str] = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        flag = "--" + key.strip().replace("_", "-")
        value = value.strip()
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                extra.append(flag)
        else:
            extra.extend([flag, value])
    return extra


def _expand_config(argv: list[str]) -> list[str]:
    """Splice config-file tokens right after the subcommand so explicit
    command-line flags, which come later, take precedence."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return argv  # let argparse report the missing value
    extra = _load_config_file(argv[idx + 1])
    return argv[:1] + extra + argv[1:]


def _cmd_run(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    report = run_experiment(spec)
    out = Path(args.output)
    out.write_text(json.dumps(report.to_dict(), indent=2))
    print(f"method={report.method} protocol={report.protocol} runs={len(report.records)}")
    print(f"accuracy: {report.mean:.4f} +/- {report.ci95:.4f} (95% CI)")
    print(f"wall: {report.wall_ms:.0f} ms, report written to {out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    values = [float(v) for v in args.values.split(",") if v.strip()]
    rows = run_sweep(spec, args.axis, values)
    write_sweep_csv(rows, args.output)
    for row in rows:
        print(f"{row.axis}={row.value:g}: {row.mean:.4f} +/- {row.ci95:.4f}")
    print(f"sweep written to {args.output}")
    return 0


def _cmd_convert(args: argparse.Namespace) -> int:
    summary = convert_content_release(args.input, args.output)
    print(f"converted: n={summary['n']} m={summary['m']} f={summary['f']} "
          f"c={summary['c']} (skipped {summary['skipped_citations']} citation rows)")
    return 0


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    report = run_gradcheck_suite(instances=args.instances, seed=args.seed, eps=args.epsilon)
    print(f"max relative error over {report.instances} instances: {report.max_rel_error:.3e}")
    if report.max_rel_error < args.threshold:
        print("gradcheck: PASS")
        return 0
    print("gradcheck: FAIL")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agst",
                                     description="graph self-training toolkit")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="evaluate a method over repeated splits")
    _add_experiment_flags(run)
    run.add_argument("--output", default="report.json", help="JSON report path")
    run.set_defaults(func=_cmd_run)

    sweep = commands.add_parser("sweep", help="sweep one hyperparameter axis")
    _add_experiment_flags(sweep)
    sweep.add_argument("--axis", choices=SWEEP_AXES, required=True)
    sweep.add_argument("--values", required=True, help="comma-separated axis values")
    sweep.add_argument("--output", default="sweep.csv", help="CSV output path")
    sweep.set_defaults(func=_cmd_sweep)

    convert = commands.add_parser("convert",
                                  help="convert a .content/.cites release to the dataset format")
    convert.add_argument("--input", required=True)
    convert.add_argument("--output", required=True)
    convert.set_defaults(func=_cmd_convert)

    gradcheck = commands.add_parser("gradcheck", help="finite-difference gradient check")
    gradcheck.add_argument("--instances", type=_positive_int, default=20)
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--epsilon", type=float, default=1e-5)
    gradcheck.add_argument("--threshold", type=float, default=1e-4)
    gradcheck.set_defaults(func=_cmd_gradcheck)

    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    raw = list(argv) if argv is not None else sys.argv[1:]
    try:
        expanded = _expand_config(raw)
        args = parser.parse_args(expanded)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (DatasetFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
