"""Command-line entry point.

Exit codes: 0 success, 2 configuration problem, 3 solver failure.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__, experiments
from .errors import (ConfigError, LinearSolveFailedError, NewtonDivergedError,
                     StiffnessFailureError)

_SUBCOMMANDS = ("simulate", "converge-n", "lipschitz", "separation",
                "sign-condition", "stationary", "decay")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="chdbc",
        description="phase-field bulk/surface experiment runner")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--outdir", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)
        if name == "stationary":
            p.add_argument("--potential",
                           choices=("logarithmic", "power", "smooth"))
            p.add_argument("--K", type=float, default=None,
                           help="outward boundary slope")
            p.add_argument("--sweep", default=None,
                           help="s_min:s_max:steps initial-slope sweep")
    return parser


def _load(args):
    overrides = {}
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        overrides = experiments.parse_config(text)
    overrides["experiment.kind"] = args.command
    if args.command == "stationary":
        if args.potential is not None:
            overrides["potential.kind"] = args.potential
        if args.K is not None:
            overrides["experiment.K"] = repr(args.K)
        if args.sweep is not None:
            overrides["experiment.sweep"] = args.sweep
    return experiments.resolve_config(overrides, seed=args.seed)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
        summary = experiments.run_experiment(cfg, args.outdir,
                                             workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NewtonDivergedError, LinearSolveFailedError,
            StiffnessFailureError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    for key, val in summary.items():
        print(f"{key}: {val}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
