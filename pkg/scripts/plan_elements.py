"""Minimum element count for a grid of target ratios and antenna/user ratios.

Runs both the exact search and the self-consistent closed form.

    python scripts/plan_elements.py --eta 0.5 0.75 0.85 --mu 2 5 10 20
"""

import argparse
import csv
import sys

from risdim.cli import fmt
from risdim.config import RunConfig
from risdim.planner import PlanRequest, min_elements_search, min_elements_self_consistent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--eta", type=float, nargs="+", default=[0.5, 0.75])
    ap.add_argument("--mu", type=int, nargs="+", default=[2, 5, 10, 20])
    args = ap.parse_args()

    cfg = RunConfig.load(args.config) if args.config else RunConfig.default()
    k = cfg.num_users
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["eta", "mu", "N_search", "N_closed_form", "side_length_m", "epsilon_limit", "high_snr_valid"])
    for mu in args.mu:
        s = cfg.scenario(num_antennas=mu * k)
        for eta in args.eta:
            req = PlanRequest(eta, s, cfg.panel(), cfg.uniform_budget())
            search = min_elements_search(req)
            closed = min_elements_self_consistent(req) if search.feasible else None
            w.writerow([fmt(eta), mu, fmt(search.n_required), fmt(closed.n_required if closed else None),
                        fmt(search.side_length if search.feasible else None), fmt(search.epsilon_limit),
                        fmt(search.high_snr_valid if search.feasible else None)])


if __name__ == "__main__":
    main()
