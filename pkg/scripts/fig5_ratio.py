"""Ratio lower bound vs. number of RIS elements for several antenna/user ratios.

    python scripts/fig5_ratio.py --mu 1 5 10 20 --points 41 --out results/fig5.csv
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from risdim.cli import fmt
from risdim.config import RunConfig
from risdim.geometry import RisPanel, aggregate_gain
from risdim.rates import epsilon_hat


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--mu", type=int, nargs="+", default=[1, 5, 10, 20])
    ap.add_argument("--points", type=int, default=41)
    ap.add_argument("--out", default="results/fig5.csv")
    args = ap.parse_args()

    cfg = RunConfig.load(args.config) if args.config else RunConfig.default()
    k = cfg.num_users
    grid = sorted({int(v) for v in np.rint(np.logspace(3, 9, args.points))})
    budget = cfg.uniform_budget()
    table = {}
    for mu in args.mu:
        s = cfg.scenario(num_antennas=mu * k)
        table[mu] = [epsilon_hat(aggregate_gain(s, RisPanel(n, 0.02, 0.02), method="square"),
                                 budget, mu * k, k, 1.0) for n in grid]

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["N"] + [f"eps_hat_mu_{mu}" for mu in args.mu])
        for i, n in enumerate(grid):
            w.writerow([n] + [fmt(table[mu][i]) for mu in args.mu])
    print(f"wrote {out} ({len(grid)} grid points)")


if __name__ == "__main__":
    main()
