"""Seeded sweep runner.

Every trial draws from a substream keyed by ``(root_seed, stream, trial)``.
With ``paired`` sweeps (the default) all grid points share ``stream = 0``,
so a sweep over ``N`` or ``P`` reuses the same fading draws at every point
(common random numbers).  With ``paired=False`` the grid index is the
stream, giving independent draws per point.  Either way results do not
depend on the worker count.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .channel import FadingModel
from .geometry import RisPanel, Scenario, aggregate_gain
from .planner import PlanRequest, PlanResult, min_elements_search
from .precoding import LinkBudget
from .rates import RateReport, evaluate, waterfill_allocation
from .stats import confidence_interval  # noqa: F401  (re-exported)

SWEEP_VARIABLES = ("N", "P", "M", "eta", "none")


@dataclass(frozen=True)
class ExperimentConfig:
    trials: int = 100
    root_seed: int = 0
    sweep_variable: str = "none"
    sweep_grid: tuple = ()
    outputs: tuple = ("rates",)
    paired: bool = True
    synthesis: str = "clt"
    fading: str = "complex-gaussian"
    gain_method: str = "square"
    allocation: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "sweep_grid", tuple(self.sweep_grid))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.sweep_variable!r}")
        if self.sweep_variable != "none" and not self.sweep_grid:
            raise ValueError("sweep grid must be nonempty")
        unknown = set(self.outputs) - {"rates", "plan"}
        if unknown:
            raise ValueError(f"unknown outputs {sorted(unknown)}")
        if self.allocation not in ("uniform", "waterfill"):
            raise ValueError(f"unknown allocation {self.allocation!r}")


@dataclass(frozen=True, eq=False)
class SweepRow:
    value: object
    report: Optional[RateReport] = None
    plan: Optional[PlanResult] = None


@dataclass(eq=False)
class SweepResult:
    rows: list
    metadata: dict = field(default_factory=dict)


def _validate_grid(config: ExperimentConfig, scenario: Scenario) -> list:
    var, grid = config.sweep_variable, list(config.sweep_grid)
    if var == "none":
        return [None]
    for g in grid:
        if var == "N" and (int(g) != g or g < 1):
            raise ValueError(f"invalid N grid value {g!r}")
        if var == "P" and not g > 0:
            raise ValueError(f"invalid transmit power {g!r}")
        if var == "M" and (int(g) != g or g < scenario.num_users):
            raise ValueError(f"invalid antenna count {g!r} for K={scenario.num_users}")
        if var == "eta" and not 0 < g < 1:
            raise ValueError(f"invalid target ratio {g!r}")
    return grid


def _apply(var, value, scenario, panel, budget):
    if var == "N":
        panel = panel.with_elements(int(value))
    elif var == "P":
        budget = budget.with_power(float(value))
    elif var == "M":
        scenario = scenario.with_antennas(int(value))
    return scenario, panel, budget


def run_experiment(config: ExperimentConfig, scenario: Scenario, panel: RisPanel,
                   budget: LinkBudget, workers: int = 1, echo: Optional[str] = None) -> SweepResult:
    """Run every grid point in order.  ``echo`` (the run configuration text) is
    stored verbatim in the metadata."""
    grid = _validate_grid(config, scenario)
    fading = FadingModel(config.fading, seed=config.root_seed)
    start = time.perf_counter()
    rows = []
    for index, value in enumerate(grid):
        sc, pn, bd = _apply(config.sweep_variable, value, scenario, panel, budget)
        report = plan = None
        gains = aggregate_gain(sc, pn, method=config.gain_method)
        if config.allocation == "waterfill":
            bd = bd.with_allocation(waterfill_allocation(
                gains, bd, sc.num_antennas, sc.num_users, pn.reflection_amplitude))
        if "rates" in config.outputs:
            report = evaluate(sc, pn, bd, fading, trials=config.trials, seed=config.root_seed,
                              stream=0 if config.paired else index, synthesis=config.synthesis,
                              gains=gains, workers=workers)
        if "plan" in config.outputs:
            eta = value if config.sweep_variable == "eta" else None
            if eta is not None:
                plan = min_elements_search(PlanRequest(float(eta), sc, pn, bd))
        rows.append(SweepRow(value=value, report=report, plan=plan))
    meta = {
        "config": asdict(config),
        "wall_time_s": time.perf_counter() - start,
        "discarded": [r.report.discarded if r.report else 0 for r in rows],
    }
    if echo is not None:
        meta["run_config"] = echo
    return SweepResult(rows=rows, metadata=meta)


def rows_equal(a: SweepResult, b: SweepResult) -> bool:
    """Bitwise comparison of two sweeps' numeric content (metadata timing ignored)."""
    if len(a.rows) != len(b.rows):
        return False
    for ra, rb in zip(a.rows, b.rows):
        if ra.value != rb.value:
            return False
        if (ra.report is None) != (rb.report is None):
            return False
        if ra.report is not None:
            for name in ("sum_rate", "sum_rate_ci", "dpc_capacity", "dpc_capacity_ci",
                         "upper_bound", "capacity_limit", "epsilon", "epsilon_hat"):
                if np.float64(getattr(ra.report, name)).tobytes() != np.float64(getattr(rb.report, name)).tobytes():
                    return False
            if ra.report.per_user_rate.tobytes() != rb.report.per_user_rate.tobytes():
                return False
        if (ra.plan is None) != (rb.plan is None):
            return False
        if ra.plan is not None and ra.plan.n_required != rb.plan.n_required:
            return False
    return True
