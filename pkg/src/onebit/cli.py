"""Command line: ``onebit run`` and ``onebit verify``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, load_config
from .scenario import run_scenario
from .verify import SUITES, run_suite


def _cmd_run(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        cfg.seed = args.seed
    if args.samples is not None:
        cfg.samples = args.samples
    if cfg.needs_seed() and cfg.seed is None:
        print(f"error: {args.config}: a seed is required for Monte Carlo methods (mc.seed or --seed)",
              file=sys.stderr)
        return 1
    return run_scenario(cfg, args.out)


def _cmd_verify(args):
    checks = run_suite(args.suite, samples=args.samples)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def build_parser():
    p = argparse.ArgumentParser(prog="onebit", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config (path or preset: fig2, fig3)")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--samples", type=int)
    run.add_argument("--out", help="output path ('-' for stdout); default from the config")
    run.set_defaults(func=_cmd_run)

    ver = sub.add_parser("verify", help="check closed forms against independent oracles")
    ver.add_argument("--suite", choices=SUITES, default="all")
    ver.add_argument("--samples", type=int, default=10 ** 7,
                     help="Monte Carlo samples per finite-difference case")
    ver.set_defaults(func=_cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except BrokenPipeError:  # reader closed stdout early, e.g. piped into head
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1


if __name__ == "__main__":
    sys.exit(main())
