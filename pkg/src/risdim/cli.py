"""Command-line entry point: ``risdim {simulate,bounds,plan,sweep-ratio,validate}``.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from typing import Optional, Sequence

import numpy as np

from .config import RunConfig
from .errors import ConfigError, GeometryDomainError, NumericalError
from .geometry import aggregate_gain
from .harness import run_experiment
from .planner import PlanRequest, min_elements_search, min_elements_self_consistent
from .rates import capacity_limit_snr, epsilon_hat, upper_bound_snr

SIMULATE_COLUMNS = ["N", "C_mc", "C_ci", "upper_bound", "C_limit", "R_mc", "R_ci", "epsilon"]
BOUNDS_COLUMNS = ["N", "k", "beta_bar_N", "beta_tilde", "ub_snr", "ub_bits", "limit_snr", "limit_bits"]
PLAN_COLUMNS = ["eta", "mu", "N_required", "side_length_m", "epsilon_at_N", "method",
                "high_snr_valid", "feasible"]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return f"{float(value):.9g}"
    return str(value)


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise AssertionError("row width does not match header")
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _load(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig.default()
    return cfg


def cmd_simulate(args) -> str:
    cfg = _load(args)
    scenario = cfg.scenario()
    panel = cfg.panel()
    exp = cfg.experiment(trials=args.trials, seed=args.seed)
    result = run_experiment(exp, scenario, panel, cfg.budget(scenario, panel), workers=args.workers,
                            echo=cfg.dumps())
    rows = []
    for row in result.rows:
        r = row.report
        rows.append([row.value, r.dpc_capacity, r.dpc_capacity_ci, r.upper_bound, r.capacity_limit,
                     r.sum_rate, r.sum_rate_ci, r.epsilon])
    return _csv(SIMULATE_COLUMNS, rows)


def cmd_bounds(args) -> str:
    cfg = _load(args)
    scenario = cfg.scenario()
    m, k = scenario.num_antennas, scenario.num_users
    rows = []
    for n in cfg.n_grid():
        panel = cfg.panel(n)
        budget = cfg.budget(scenario, panel)
        gains = aggregate_gain(scenario, panel, method="square")
        gamma = panel.reflection_amplitude
        ub = upper_bound_snr(gains, budget, m, k, gamma)
        lim = capacity_limit_snr(scenario, budget, gamma)
        ub_bits, lim_bits = np.log2(1 + ub), np.log2(1 + lim)
        for i in range(k):
            rows.append([n, i, gains.per_user_aggregate[i], gains.asymptotic_limit[i],
                         ub[i], ub_bits[i], lim[i], lim_bits[i]])
        rows.append([n, "total", None, None, None, float(ub_bits.sum()), None, float(lim_bits.sum())])
    return _csv(BOUNDS_COLUMNS, rows)


def cmd_plan(args) -> str:
    cfg = _load(args)
    if not 0.0 < args.eta < 1.0:
        raise ConfigError(f"--eta must lie in (0, 1), got {args.eta}")
    scenario = cfg.scenario()
    panel = cfg.panel()
    request = PlanRequest(args.eta, scenario, panel, cfg.budget(scenario, panel))
    if args.method == "search":
        res = min_elements_search(request)
    else:
        res = min_elements_self_consistent(request)
    row = [args.eta, request.mu, res.n_required, res.side_length if res.feasible else None,
           res.epsilon_at_n if res.feasible else None, res.method,
           res.high_snr_valid if res.feasible else None, res.feasible]
    return _csv(PLAN_COLUMNS, [row])


def _mu_list(text: str) -> list[float]:
    try:
        mus = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"--mu-list: {exc}") from exc
    if not mus:
        raise ConfigError("--mu-list is empty")
    return mus


def cmd_sweep_ratio(args) -> str:
    cfg = _load(args)
    k = cfg.num_users
    mus = _mu_list(args.mu_list)
    antennas = []
    for mu in mus:
        m = mu * k
        if mu < 1 or abs(m - round(m)) > 1e-9:
            raise ConfigError(f"--mu-list: mu={mu:g} gives non-integer or too few antennas M={m:g} for K={k}")
        antennas.append(int(round(m)))
    grid = cfg.n_grid()
    columns = {}
    for mu, m in zip(mus, antennas):
        scenario = cfg.scenario(num_antennas=m)
        col = []
        for n in grid:
            panel = cfg.panel(n)
            gains = aggregate_gain(scenario, panel, method="square")
            # water-filling is undefined at M = K, where the bound is 0 regardless
            budget = cfg.budget(scenario, panel) if m > k else cfg.uniform_budget()
            col.append(epsilon_hat(gains, budget, m, k, panel.reflection_amplitude))
        columns[mu] = col
    header = ["N"] + [f"eps_hat_mu_{mu:g}" for mu in mus]
    rows = [[n] + [columns[mu][i] for mu in mus] for i, n in enumerate(grid)]
    return _csv(header, rows)


def cmd_validate(args) -> tuple[str, int]:
    from .validation import run_all

    checks = run_all()
    lines = [c.line() for c in checks]
    failed = [c for c in checks if c.passed is False]
    lines.append(f"{len(checks) - len(failed)}/{len(checks)} checks passed or reported; "
                 f"{len(failed)} failed")
    return "\n".join(lines) + "\n", (1 if failed else 0)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="TOML run configuration (default: built-in reference layout)")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--trials", type=int, help="override [experiment] trials")
    common.add_argument("--seed", type=int, help="override [experiment] root_seed")
    common.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo trials")

    parser = argparse.ArgumentParser(prog="risdim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="Monte Carlo capacity and ZF sum-rate vs N")
    sub.add_parser("bounds", parents=[common], help="closed-form per-user bound terms")
    p = sub.add_parser("plan", parents=[common], help="minimum N reaching a target ratio")
    p.add_argument("--eta", type=float, required=True)
    p.add_argument("--method", choices=["search", "closed-form"], default="search")
    s = sub.add_parser("sweep-ratio", parents=[common], help="ratio lower bound vs N for several mu")
    s.add_argument("--mu-list", default="1,5,10,20")
    sub.add_parser("validate", parents=[common], help="run the built-in oracle checks")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "bounds": cmd_bounds,
    "plan": cmd_plan,
    "sweep-ratio": cmd_sweep_ratio,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    code = 0
    try:
        if args.command == "validate":
            text, code = cmd_validate(args)
        else:
            if args.trials is not None and args.trials < 1:
                raise ConfigError("--trials must be at least 1")
            text = COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GeometryDomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
