"""Command line entry point: ``propmeasure run|compare|verify|stall|weakest-bounds``."""

from __future__ import annotations

import argparse
import logging
import math
import sys

from .compare import DEFAULT_PROGRESS_GRID
from .experiment import (
    EXIT_CONFIG,
    ConfigError,
    ExperimentConfig,
    cmd_compare,
    cmd_run,
    cmd_stall,
    cmd_verify,
    cmd_weakest,
)
from .propagator import VARIANTS, PropagationConfig
from .stall import DEFAULT_GRID


def _floats(text: str) -> list[float]:
    try:
        return [math.inf if t.strip().lower() in ("inf", "infinity") else float(t)
                for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instances", nargs="+", required=True, metavar="GLOB",
                        help="instance files (.mps or canonical text); globs allowed")
    common.add_argument("--variant", choices=[*VARIANTS, "both"], default="both")
    common.add_argument("--max-rounds", type=int, default=100)
    common.add_argument("--stop", choices=["fixpoint", "tolerance"], default="fixpoint")
    common.add_argument("--tau", type=float, default=1e-3, help="significance threshold for --stop tolerance")
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="propmeasure", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="measure progress curves and traces")
    cmp_ = sub.add_parser("compare", parents=[common], help="speedup at progress levels")
    cmp_.add_argument("--progress-grid", type=_floats,
                      default=list(DEFAULT_PROGRESS_GRID), metavar="LIST")
    cmp_.add_argument("--baseline", choices=VARIANTS, default="immediate")
    cmp_.add_argument("--candidate", choices=VARIANTS, default="deferred")
    sub.add_parser("verify", parents=[common], help="check that variants reach the same fixed point")
    stall = sub.add_parser("stall", parents=[common], help="premature-stall sweep")
    stall.add_argument("--p", type=_floats, default=None, metavar="LIST")
    stall.add_argument("--q", type=_floats, default=None, metavar="LIST")
    sub.add_parser("weakest-bounds", parents=[common], help="write weakest bounds per instance")
    return parser


def _config(args) -> ExperimentConfig:
    variants = VARIANTS if args.variant == "both" else (args.variant,)
    try:
        prop = PropagationConfig(max_rounds=args.max_rounds, stop_mode=args.stop,
                                 significance_rel_tol=args.tau)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = ExperimentConfig(instances=args.instances, variants=variants, propagation=prop,
                           out_dir=args.out, workers=args.workers)
    if args.command == "compare":
        if not args.progress_grid or any(not 0 < x <= 100 for x in args.progress_grid):
            raise ConfigError("progress grid values must lie in (0, 100]")
        cfg.progress_grid = args.progress_grid
        cfg.baseline, cfg.candidate = args.baseline, args.candidate
    if args.command == "stall" and (args.p is not None or args.q is not None):
        if args.p is None or args.q is None or len(args.p) != len(args.q):
            raise ConfigError("--p and --q must be given together with equal lengths")
        if any(v < 0 for v in args.p + args.q):
            raise ConfigError("--p and --q must be non-negative")
        cfg.stall_grid = list(zip(args.p, args.q))
    elif args.command == "stall":
        cfg.stall_grid = DEFAULT_GRID
    return cfg


COMMANDS = {
    "run": cmd_run,
    "compare": cmd_compare,
    "verify": cmd_verify,
    "stall": cmd_stall,
    "weakest-bounds": cmd_weakest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"propmeasure: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
