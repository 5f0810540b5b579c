"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error, 3 Fano-floor violation (with ``--check-fano``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from .bounds import AS_PRINTED, SWAPPED, bounds_report
from .decoders import CapacityError
from .designs import Strategy, StrategySpecError
from .noise import ModelSpecError, NoiseModel
from .sim import (AXES, ConfigError, ExperimentConfig, fmt, run_experiment, sidecar_json,
                  summaries_to_csv, sweep)
from .verify import run_verify

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_FANO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _model(text):
    try:
        return NoiseModel.parse(text)
    except ModelSpecError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _strategy(text):
    try:
        return Strategy.parse(text)
    except StrategySpecError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _default_seed():
    value = os.environ.get("GTLAB_SEED")
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"GTLAB_SEED must be an integer, got {value!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="gtlab", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key = value file mirroring flag names; "
                        "flags on the command line take precedence")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="evaluate the test-count bounds")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--model", type=_model, required=True)
    b.add_argument("--grid-step", type=float, default=0.01)
    b.add_argument("--mi-orientation", choices=(AS_PRINTED, SWAPPED), default=AS_PRINTED)
    b.add_argument("--format", choices=("json", "csv"), default="json")
    b.add_argument("--output")

    for name, text in (("simulate", "run one Monte Carlo experiment"),
                       ("sweep", "run one experiment per value of an axis")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--n", type=int, required=True)
        s.add_argument("--k", type=int, required=True)
        s.add_argument("--model", type=_model, required=True)
        s.add_argument("--strategy", type=_strategy, default=Strategy.parse("bernoulli:p=opt"))
        s.add_argument("--tests", type=int, help="test budget T (optional for binary-split)")
        s.add_argument("--trials", type=int, default=1000)
        s.add_argument("--seed", type=int, help="default: $GTLAB_SEED or 0")
        s.add_argument("--decoder", choices=("ml",), default="ml")
        s.add_argument("--check-fano", action="store_true",
                       help="exit 3 if the error rate falls below the Fano floor")
        s.add_argument("--stratified", action="store_true",
                       help="enumerate defective sets instead of sampling them")
        s.add_argument("--grid-step", type=float, default=0.01)
        s.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--output")
        if name == "sweep":
            s.add_argument("--axis", choices=AXES, required=True)
            s.add_argument("--values", required=True, help="comma-separated values")

    v = sub.add_parser("verify", help="run the built-in consistency checks")
    v.add_argument("--quick", action="store_true", help="k <= 3 and a short Fano preset run")
    v.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def _config_args(path, command):
    """Translate a key = value file into flag tokens for ``command``."""
    tokens = []
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip().lstrip("-").replace("_", "-"), value.strip()
        if not eq or not key:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        if value.lower() in ("true", "yes", "on"):
            tokens.append(f"--{key}")
        elif value.lower() not in ("false", "no", "off"):
            tokens.extend([f"--{key}", value])
    return tokens


def _split_config(argv):
    """Pull ``--config`` out of argv and splice the file's flags in front of
    the command-line flags so the latter win."""
    argv = list(argv)
    path = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
            del argv[i:i + 2]
            break
        if token.startswith("--config="):
            path = token.split("=", 1)[1]
            del argv[i]
            break
    if path is None:
        return argv
    commands = {"bounds", "simulate", "sweep", "verify"}
    at = next((i for i, t in enumerate(argv) if t in commands), None)
    if at is None:
        return argv
    return argv[:at + 1] + _config_args(path, argv[at]) + argv[at + 1:]


def _emit(text, output):
    if not text.endswith("\n"):
        text += "\n"
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_bounds(args):
    report = bounds_report(args.model, args.n, args.k, args.grid_step, args.mi_orientation)
    data = report.to_dict()
    if args.format == "json":
        data = {"n": args.n, "k": args.k, "model": str(args.model), **data}
        _emit(json.dumps(data, indent=2), args.output)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["p", "ell", "ratio_upper", "ratio_lower"])
        for row in report.table:
            writer.writerow([fmt(row["p"]), row["ell"], fmt(row["ratio_upper"]),
                             fmt(row["ratio_lower"])])
        _emit(buf.getvalue(), args.output)
    return EXIT_OK


def _experiment(args):
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    seed = args.seed if args.seed is not None else _default_seed()
    return ExperimentConfig(args.n, args.k, args.model, args.strategy, args.tests, args.trials,
                            seed=seed, stratified=args.stratified, grid_step=args.grid_step)


def _report_runs(args, summaries):
    if args.format == "csv":
        _emit(summaries_to_csv(summaries), args.output)
    else:
        rows = [{k: (fmt(v) if isinstance(v, float) else v) for k, v in s.to_dict().items()}
                for s in summaries]
        _emit(json.dumps(rows if len(rows) > 1 else rows[0], indent=2), args.output)
    if args.output:
        _emit(sidecar_json(summaries, {"command": args.command}), args.output + ".json")
    if args.check_fano and any(s.floor_violated for s in summaries):
        print("Fano floor violated", file=sys.stderr)
        return EXIT_FANO
    return EXIT_OK


def cmd_simulate(args):
    return _report_runs(args, [run_experiment(_experiment(args), jobs=args.jobs)])


def cmd_sweep(args):
    cast = int if args.axis in ("T", "N") else float
    try:
        values = [cast(v) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --values for axis {args.axis}: {args.values!r}") from None
    if not values:
        raise UsageError("--values is empty")
    return _report_runs(args, sweep(_experiment(args), args.axis, values, jobs=args.jobs))


def cmd_verify(args):
    return EXIT_OK if run_verify(quick=args.quick, inject_fault=args.inject_fault) else EXIT_VERIFY


COMMANDS = {"bounds": cmd_bounds, "simulate": cmd_simulate, "sweep": cmd_sweep,
            "verify": cmd_verify}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(_split_config(argv))
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, ConfigError, CapacityError, ValueError) as exc:
        print(f"gtlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
