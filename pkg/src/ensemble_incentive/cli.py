"""Command-line driver for the experiment pipelines."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .surrogate import FittedAccuracyModel

log = logging.getLogger("ensemble_incentive")


def _load_config(args) -> harness.ExperimentConfig:
    config = harness.parse_config(args.config) if args.config else harness.ExperimentConfig()
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _out_dir(args, config) -> Path:
    return Path(args.out if args.out else config.output_dir)


def _load_model(args, config, out: Path) -> FittedAccuracyModel:
    path = Path(args.model) if args.model else harness.model_path(out, config.model.objective)
    if not path.is_file():
        raise FileNotFoundError(
            f"no fitted model at {path}; run 'accuracy-sweep' first or pass --model"
        )
    return FittedAccuracyModel.load(path)


def cmd_accuracy_sweep(args, config, out):
    res = harness.run_accuracy_sweep(config, out, jobs=args.jobs)
    print(f"pearson(surrogate, accuracy) = {res.pearson:.4f}")
    failed = [t for t in ("surrogate", "accuracy") if res.summary.get(f"fit_{t}_status") != "ok"]
    for t in failed:
        print(f"warning: {t} fit {res.summary[f'fit_{t}_status']}", file=sys.stderr)
    return 1 if failed else 0


def cmd_fit(args, config, out):
    source = Path(args.csv) if args.csv else out / "accuracy_sweep.csv"
    info = harness.refit(config, source, out)
    failed = [t for t in ("surrogate", "accuracy") if info.get(f"fit_{t}_status") != "ok"]
    for t in ("surrogate", "accuracy"):
        print(f"{t}: {info.get(f'fit_{t}_status')} rmse={info.get(f'fit_{t}_rmse', 'nan')}")
    return 1 if failed else 0


def cmd_optimize(args, config, out):
    report = harness.run_optimize(config, _load_model(args, config, out), out)
    sys.stdout.write(report.to_text())
    return 0


def cmd_convergence(args, config, out):
    res = harness.run_convergence_study(config, _load_model(args, config, out), out)
    print(f"mean iterations = {res.summary['mean_iterations']:.2f}, "
          f"converged = {res.summary['converged_fraction']:.0%}")
    return 0


def cmd_gamma_sweep(args, config, out):
    res = harness.run_gamma_sweep(config, _load_model(args, config, out), out)
    for k, v in res.summary.items():
        print(f"{k} = {v}")
    return 0


def cmd_oracle_compare(args, config, out):
    res = harness.run_oracle_compare(config, _load_model(args, config, out), out)
    for k, v in res.summary.items():
        print(f"{k} = {v}")
    return 0


COMMANDS = {
    "accuracy-sweep": (cmd_accuracy_sweep, "simulate the (N, D) grid and fit both surfaces"),
    "fit": (cmd_fit, "refit the surfaces from an accuracy-sweep CSV"),
    "optimize": (cmd_optimize, "run the alternating optimizer once"),
    "convergence": (cmd_convergence, "iterations to convergence across seeds and gamma"),
    "gamma-sweep": (cmd_gamma_sweep, "mechanism outcome as the accuracy weight grows"),
    "oracle-compare": (cmd_oracle_compare, "alternating optimizer vs exhaustive search"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ensemble-incentive", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key-value configuration file")
        p.add_argument("--seed", type=int, help="master seed overriding every seed in the config")
        p.add_argument("--out", help="output directory (default: output.dir from the config)")
        p.add_argument("--model", help="fitted model file (default: <out>/model_<objective>.txt)")
        if name == "accuracy-sweep":
            p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        if name == "fit":
            p.add_argument("--csv", help="accuracy-sweep CSV (default: <out>/accuracy_sweep.csv)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _load_config(args)
        out = _out_dir(args, config)
        return COMMANDS[args.command][0](args, config, out)
    except (harness.ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
