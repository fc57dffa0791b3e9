"""Command-line runner: one subcommand per experiment kind.

Exit codes: 0 all indicators passed, 1 an acceptance indicator failed,
2 usage or configuration error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, ViscosityLabError
from .experiments import KINDS, ExperimentConfig, load_config, run, write_report

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


def _resolution(text: str) -> tuple[int, int]:
    try:
        nr, nt = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected NR,NT, got {text!r}") from exc
    return nr, nt


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="viscosity-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", type=Path, help="INI experiment file")
        p.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
        p.add_argument("--seed", type=int, help="random seed (overrides [experiment] seed)")
        p.add_argument("--resolution", type=_resolution, metavar="NR,NT",
                       help="grid resolution (overrides [domain] resolution)")
    return parser


def _configure(args) -> ExperimentConfig:
    if args.config is not None:
        cfg = load_config(args.config)
        if cfg.kind != args.kind:
            raise ConfigurationError(f"experiment.kind: config is {cfg.kind!r}, subcommand is {args.kind!r}")
    else:
        cfg = ExperimentConfig(kind=args.kind, name=args.kind)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = str(args.out)
    if args.resolution is not None:
        cfg = ExperimentConfig(**{**cfg.to_dict(), "resolution": args.resolution})
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        cfg = _configure(args)
    except ConfigurationError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        bundle = run(cfg)
    except ConfigurationError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ViscosityLabError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        write_report(bundle, cfg.out)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for ind in bundle.indicators:
        status = "PASS" if ind.passed else "FAIL"
        print(f"{status}  {ind.name}: {ind.value!r} ({ind.relation} {ind.threshold!r})")
    return EXIT_PASS if bundle.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
