"""Command-line entry point.

Exit codes: 0 on success, 2 on a usage error, 1 on a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .runner import PARAM_SPECS, NumericalFailure, RunConfig, run_experiment


def _seed(s):
    v = int(s, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="probwork",
                                     description="Reproducible probability experiments.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, spec in PARAM_SPECS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--seed", type=_seed, default=0, help="master seed (64-bit)")
        sp.add_argument("--trials", type=int, default=100)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", default="out", help="output directory")
        for key, (_, default, help_) in spec.items():
            d = ",".join(map(str, default)) if isinstance(default, tuple) else default
            sp.add_argument(f"--{key.replace('_', '-')}", dest=f"p_{key}", default=None,
                            help=f"{help_} (default {d})")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    params = {k[2:]: v for k, v in vars(args).items() if k.startswith("p_") and v is not None}
    try:
        cfg = RunConfig(args.subcommand, params, args.seed, args.trials, args.threads, args.out)
    except ValueError as exc:
        print(f"probwork {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2
    try:
        res = run_experiment(cfg)
    except NumericalFailure as exc:
        print(f"probwork: numerical failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"probwork {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, FloatingPointError, OverflowError) as exc:
        print(f"probwork: numerical failure: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({k: v for k, v in res.items() if k != "summary"}))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
