"""Rate analysis and element-count dimensioning for RIS-assisted multi-user MISO downlinks."""

from .channel import ChannelRealization, FadingModel, normalized_sum_samples, synthesize_clt, synthesize_exact
from .errors import (
    BudgetExceededError,
    ConfigError,
    ConvergenceError,
    GeometryDomainError,
    InfeasibleGeometryError,
    NumericalError,
    RankDeficientError,
    RisDimError,
)
from .geometry import (
    GainProfile,
    LayoutParams,
    RisPanel,
    Scenario,
    aggregate_gain,
    asymptotic_gain,
    build_layout,
    element_positions,
    panel_from_count,
    path_gain,
    quadrature_gain,
)
from .harness import ExperimentConfig, SweepResult, run_experiment
from .planner import PlanRequest, PlanResult, min_elements_closed_form, min_elements_search
from .precoding import LinkBudget, snr_closed, snr_direct, uniform_power, waterfill, zf_precoder
from .rates import (
    RateReport,
    capacity_limit,
    capacity_upper_bound,
    dpc_capacity_mc,
    epsilon_hat,
    evaluate,
    sum_rate_mc,
)
from .stats import confidence_interval

__version__ = "0.1.0"
