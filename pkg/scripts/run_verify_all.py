#!/usr/bin/env python3
"""Run every suite and print the criterion summary table.

Equivalent to `gasgiant-tomo verify-all`, then pretty-prints summary.csv.

Usage: run_verify_all.py [--config cfg.yaml] [--out dir] [--seed N] [--parallel]
"""

import csv
import os
import sys

from gasgiant.cli import main as cli_main


def main() -> int:
    args = ["verify-all"] + sys.argv[1:]
    rc = cli_main(args)

    out = None
    for flag in ("--out",):
        if flag in sys.argv:
            out = sys.argv[sys.argv.index(flag) + 1]
    out = out or os.environ.get("GASGIANT_TOMO_OUT", "artifacts")
    path = os.path.join(out, "summary.csv")
    if os.path.exists(path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        for r in rows:
            print("  ".join(v.ljust(w) for v, w in zip(r, widths)))
    return rc


if __name__ == "__main__":
    sys.exit(main())
