"""Command-line entry point: `gasgiant-tomo <suite> [options]`.

Subcommands map to verification suites (trace, transform, probe, jacobi,
pestov) plus verify-all, which runs every suite and writes a summary
table.  The exit status is 0 when all gated criteria pass, 1 when a
criterion fails (artifacts are still written), 2 on configuration errors.
The output directory resolves in order: --out flag, GASGIANT_TOMO_OUT
environment variable, the config's `out` entry.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import load_config
from .errors import ConfigError, SuiteFailure
from .suites import SUITES, run


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gasgiant-tomo",
        description="Numerical verification suites for geodesic ray "
                    "transforms on boundary-degenerate half-cylinder metrics.")
    sub = p.add_subparsers(dest="suite", required=True)
    for name in SUITES + ("verify-all",):
        sp = sub.add_parser(name, help=f"run the {name} suite")
        sp.add_argument("--config", default=None,
                        help="YAML config path (defaults when omitted)")
        sp.add_argument("--out", default=None, help="artifact directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed (u64)")
        sp.add_argument("--parallel", action="store_true",
                        help="run independent suites concurrently")
    return p


def _print_results(results) -> None:
    for res in results:
        for c in sorted(res.criteria, key=lambda c: c.cid):
            status = "PASS" if c.passed else "FAIL"
            print(f"[{status}] criterion {c.cid:2d} ({c.name}): "
                  f"{c.measured}  [need {c.threshold}]")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be a non-negative integer")
            cfg.seed = args.seed
        out = args.out or os.environ.get("GASGIANT_TOMO_OUT") or cfg.out
        results = run(args.suite, cfg, out=out, parallel=args.parallel)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SuiteFailure as exc:
        if exc.results:
            _print_results(exc.results)
        print(f"FAILED: {exc}", file=sys.stderr)
        return 1
    _print_results(results)
    print("all criteria passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
