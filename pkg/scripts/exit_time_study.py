#!/usr/bin/env python3
"""Exit-time asymptotics tau(x0) = x0 + O(x0^3) across models.

For a fixed boundary covector (y0, eta0), starts descending at height x0
closed to unit speed and fits the log-log slope of |tau - x0|; the
remainder is cubic in x0.  Writes gnuplot data (x0, remainder) per model.

Usage: exit_time_study.py [--out dir] [--n 12] [--x0-min 1e-3] [--x0-max 0.1]
"""

import argparse
import os

import numpy as np

from gasgiant.flow import IntegratorOptions, exit_time_asymptotic_fit
from gasgiant.metric import make_model


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="artifacts")
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--x0-min", type=float, default=1e-3)
    ap.add_argument("--x0-max", type=float, default=0.1)
    ap.add_argument("--y0", type=float, default=0.3)
    ap.add_argument("--eta0", type=float, default=1.0)
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    opts = IntegratorOptions()
    grid = np.geomspace(args.x0_min, args.x0_max, args.n)
    for name in ("euclidean", "perturbed"):
        model = make_model(name)
        fit = exit_time_asymptotic_fit(model, args.y0, args.eta0, grid, opts)
        path = os.path.join(args.out, f"exit_time_{name}.dat")
        with open(path, "w") as fh:
            fh.write("# x0 remainder\n")
            for x0, r in zip(fit.x0_grid, fit.remainders):
                fh.write(f"{x0:.17g} {r:.17g}\n")
        print(f"{name}: remainder slope {fit.slope:.3f} -> {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
