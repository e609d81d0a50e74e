"""Command-line entry point.

Subcommands::

    speedkaf generate --length 5000 [--seed S] [--noise 0.02] [--out series.csv]
    speedkaf run --config exp.cfg [--trials N] [--seed S] [--out DIR]
    speedkaf sweep --config exp.cfg --param m --values 5,10,20,50 [--out DIR]
    speedkaf report DIR [DIR ...]

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
runtime or numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from speedkaf.bench import (
    ConfigError,
    MethodSpec,
    TrialError,
    format_float,
    load_config,
    run_experiment,
    run_prediction_experiment,
    write_csv,
)
from speedkaf.errors import NumericalError
from speedkaf.timeseries import MackeyGlassConfig, add_noise, generate_mg, write_series_csv

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="speedkaf", description="Eigenfunction features for kernel adaptive filtering")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a Mackey-Glass series as CSV")
    gen.add_argument("--length", type=int, default=5000)
    gen.add_argument("--seed", type=int, default=None, help="noise seed (omit for a clean series)")
    gen.add_argument("--noise", type=float, default=0.02)
    gen.add_argument("--out", default="-")

    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", default=".")

    sweep = sub.add_parser("sweep", help="final test MSE while varying one parameter")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--param", required=True)
    sweep.add_argument("--values", required=True)
    sweep.add_argument("--trials", type=int)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--out", default=".")

    report = sub.add_parser("report", help="tabulate summary CSVs from run outputs")
    report.add_argument("dirs", nargs="+")
    return parser


def _generate(args) -> None:
    if args.length < 1:
        raise ConfigError("--length must be positive")
    series = generate_mg(MackeyGlassConfig(length=args.length))
    if args.seed is not None:
        series = add_noise(series, args.noise, args.seed)
    if args.out == "-":
        sys.stdout.write("value\n")
        sys.stdout.writelines(f"{format_float(v)}\n" for v in series)
    else:
        write_series_csv(args.out, series)


def _run(args) -> None:
    cfg = load_config(args.config, trials=args.trials, seed=args.seed)
    run_experiment(cfg, args.out)


def _sweep(args) -> None:
    cfg = load_config(args.config, trials=args.trials, seed=args.seed)
    if cfg.experiment != "prediction":
        raise ConfigError("sweep supports prediction experiments only")
    try:
        values = [v.strip() for v in args.values.split(",") if v.strip()]
        if not values:
            raise ValueError
    except ValueError as exc:
        raise ConfigError(f"--values: expected a comma-separated list, got {args.values!r}") from exc

    rows = []
    for value in values:
        if args.param in ("m", "batch"):
            try:
                number = int(value)
            except ValueError as exc:
                raise ConfigError(f"--values: {value!r} is not an integer") from exc
            key = "dimension" if args.param == "m" else "batch"
            methods = tuple(MethodSpec.parse(n).with_values(**{key: number}).name for n in cfg.methods)
            variant = cfg.replace(methods=methods)
        else:
            from speedkaf.bench import parse_config_text

            variant = parse_config_text(f"{args.param} = {value}", **{
                k: getattr(cfg, k) for k in cfg.__dataclass_fields__ if k != args.param
            })
        curves = run_prediction_experiment(variant)
        for name, curve in curves.items():
            rows.append([value, name, curve.final_mse, curve.final_se])
    write_csv(Path(args.out) / f"sweep_{args.param}.csv",
              [args.param, "method", "final_mse_mean", "final_mse_se"], rows)


def _report(args) -> None:
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["run", "method", "final_mse_mean", "final_mse_se"])
    for directory in args.dirs:
        path = Path(directory) / "summary.csv"
        if not path.is_file():
            raise ConfigError(f"{path} not found")
        with path.open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                writer.writerow([directory, row["method"], row["final_mse_mean"], row["final_mse_se"]])


_COMMANDS = {"generate": _generate, "run": _run, "sweep": _sweep, "report": _report}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        _COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"speedkaf: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, TrialError, np.linalg.LinAlgError, ArithmeticError, ValueError) as exc:
        print(f"speedkaf: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
