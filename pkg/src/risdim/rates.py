"""Monte Carlo rate / capacity estimators and the closed-form bounds.

Rates are in bit/s/Hz.  Every estimator works from the SNR expressions;
no symbols are ever transmitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import FadingModel, synthesize_clt, synthesize_exact
from .errors import GeometryDomainError, NumericalError, RankDeficientError
from .geometry import GainProfile, RisPanel, Scenario, aggregate_gain, asymptotic_gain
from .precoding import LinkBudget, check_rank, inverse_gram_diagonal, waterfill
from .stats import confidence_interval, ordered_map, substream

MAX_DISCARD_FRACTION = 0.01
MAX_REDRAWS = 50


@dataclass(frozen=True, eq=False)
class McEstimate:
    per_user: np.ndarray
    total: float
    ci_halfwidth: float
    samples: np.ndarray  # (trials,) per-trial totals
    per_user_samples: np.ndarray  # (trials, K)
    discarded: int

    @property
    def trials(self) -> int:
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class RateReport:
    per_user_rate: np.ndarray
    sum_rate: float
    sum_rate_ci: float
    dpc_capacity: float
    dpc_capacity_ci: float
    upper_bound: float
    capacity_limit: float
    epsilon: float
    epsilon_hat: float
    trials: int
    discarded: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def ci_halfwidth(self) -> float:
        return self.sum_rate_ci


def _snr_scale(budget: LinkBudget, k: int) -> np.ndarray:
    return budget.transmit_power * budget.allocation / (k * budget.noise_power)


# ---------------------------------------------------------------- closed forms

def upper_bound_snr(gains: GainProfile, budget: LinkBudget, num_antennas: int,
                    num_users: int, gamma: float) -> np.ndarray:
    return _snr_scale(budget, num_users) * gains.per_user_aggregate * gamma**2 * num_antennas


def capacity_upper_bound(gains: GainProfile, budget: LinkBudget, num_antennas: int,
                         num_users: int, gamma: float) -> float:
    """Jensen bound ``sum_k log2(1 + P Lambda_k/(K sigma^2) beta_bar_k Gamma^2 M N)``."""
    return float(np.sum(np.log2(1.0 + upper_bound_snr(gains, budget, num_antennas, num_users, gamma))))


def asymptotic_gains(scenario: Scenario) -> np.ndarray:
    z0 = scenario.bs_distance
    return np.array([asymptotic_gain(z0, zk, scenario.wavelength, scenario.antenna_gain)
                     for zk in scenario.user_distances])


def capacity_limit_snr(scenario: Scenario, budget: LinkBudget, gamma: float) -> np.ndarray:
    k, m = scenario.num_users, scenario.num_antennas
    return _snr_scale(budget, k) * gamma**2 * m * asymptotic_gains(scenario)


def capacity_limit(scenario: Scenario, budget: LinkBudget, gamma: float) -> float:
    """Capacity cap as the panel grows without bound, using the closed-form limit gain."""
    return float(np.sum(np.log2(1.0 + capacity_limit_snr(scenario, budget, gamma))))


def _epsilon_hat_terms(aggregate, limit, budget, num_antennas, num_users, gamma):
    if num_antennas < num_users:
        raise GeometryDomainError(f"M={num_antennas} < K={num_users}")
    mu = num_antennas / num_users
    base = budget.snr * budget.allocation * gamma**2
    num = np.sum(np.log2(1.0 + base * np.asarray(aggregate) * (mu - 1.0)))
    den = np.sum(np.log2(1.0 + base * mu * np.asarray(limit)))
    return num, den


def epsilon_hat(gains: GainProfile, budget: LinkBudget, num_antennas: int,
                num_users: int, gamma: float) -> float:
    """Lower bound on the ratio of the ZF sum-rate to the capacity cap.

    Numerator uses the finite-panel aggregate ``beta_bar_k N`` with
    ``mu - 1``; denominator uses the closed-form limit gain with ``mu``;
    ``mu = M / K``.
    """
    num, den = _epsilon_hat_terms(gains.per_user_aggregate, gains.asymptotic_limit,
                                  budget, num_antennas, num_users, gamma)
    if den == 0:
        return 0.0
    return float(num / den)


def epsilon_hat_from_aggregate(aggregate, limit, budget, num_antennas, num_users, gamma) -> float:
    num, den = _epsilon_hat_terms(aggregate, limit, budget, num_antennas, num_users, gamma)
    return 0.0 if den == 0 else float(num / den)


def zf_effective_gains(gains: GainProfile, num_antennas: int, num_users: int, gamma: float) -> np.ndarray:
    """``1 / E[[(G G^H)^{-1}]_kk] = beta_bar_k N Gamma^2 (M - K)``."""
    return gains.per_user_aggregate * gamma**2 * (num_antennas - num_users)


def waterfill_allocation(gains: GainProfile, budget: LinkBudget, num_antennas: int,
                         num_users: int, gamma: float) -> np.ndarray:
    eff = zf_effective_gains(gains, num_antennas, num_users, gamma)
    return waterfill(eff, budget.transmit_power, budget.noise_power)


# ----------------------------------------------------------------- Monte Carlo

@dataclass(frozen=True, eq=False)
class _TrialSetup:
    scenario: Scenario
    panel: RisPanel
    budget: LinkBudget
    gains: GainProfile
    synthesis: str
    fading: FadingModel
    root_seed: int
    stream: int


def _run_trial(setup: _TrialSetup, trial: int):
    k = setup.scenario.num_users
    scale = _snr_scale(setup.budget, k)
    if setup.panel.reflection_amplitude == 0 or not np.any(setup.gains.per_user_aggregate > 0):
        # G is identically zero: every SNR is zero and ZF is undefined
        return np.zeros(k), np.zeros(k), 0
    for attempt in range(MAX_REDRAWS):
        rng = substream(setup.root_seed, setup.stream, trial, attempt)
        if setup.synthesis == "clt":
            real = synthesize_clt(setup.scenario, setup.panel, rng, gains=setup.gains)
        else:
            real = synthesize_exact(setup.scenario, setup.panel, setup.fading, rng, gains=setup.gains)
        G = real.G
        dpc = np.log2(1.0 + scale * np.real(np.einsum("km,km->k", G, np.conj(G))))
        try:
            check_rank(G)
        except RankDeficientError:
            continue
        zf = np.log2(1.0 + scale / inverse_gram_diagonal(G))
        return zf, dpc, attempt
    raise NumericalError(f"trial {trial}: channel stayed rank deficient after {MAX_REDRAWS} redraws")


def _paired_estimates(scenario, panel, budget, fading, trials, seed, stream, synthesis,
                      gain_method, gains, workers):
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if synthesis not in ("clt", "exact"):
        raise ValueError(f"unknown synthesis mode {synthesis!r}")
    if gains is None:
        gains = aggregate_gain(scenario, panel, method=gain_method)
    setup = _TrialSetup(scenario, panel, budget, gains, synthesis,
                        fading or FadingModel(), int(seed), int(stream))
    results = ordered_map(lambda t: _run_trial(setup, t), range(trials), workers)
    zf = np.array([r[0] for r in results])
    dpc = np.array([r[1] for r in results])
    discarded = int(sum(r[2] for r in results))
    if discarded > MAX_DISCARD_FRACTION * trials:
        raise NumericalError(f"{discarded} of {trials} trials were rank deficient and redrawn")
    return _summarise(zf, discarded), _summarise(dpc, 0), gains


def _summarise(per_user_samples: np.ndarray, discarded: int) -> McEstimate:
    totals = per_user_samples.sum(axis=1)
    if len(totals) >= 2:
        mean, hw = confidence_interval(totals)
    else:
        mean, hw = float(totals[0]), float("nan")
    return McEstimate(per_user=per_user_samples.mean(axis=0), total=mean, ci_halfwidth=hw,
                      samples=totals, per_user_samples=per_user_samples, discarded=discarded)


def sum_rate_mc(scenario: Scenario, panel: RisPanel, budget: LinkBudget,
                fading: Optional[FadingModel] = None, trials: int = 100, seed: int = 0, *,
                stream: int = 0, synthesis: str = "clt", gain_method: str = "square",
                gains: Optional[GainProfile] = None, workers: int = 1) -> McEstimate:
    """ZF sum-rate: mean over trials of ``sum_k log2(1 + gamma_k)``."""
    zf, _, _ = _paired_estimates(scenario, panel, budget, fading, trials, seed, stream,
                                 synthesis, gain_method, gains, workers)
    return zf


def dpc_capacity_mc(scenario: Scenario, panel: RisPanel, budget: LinkBudget,
                    fading: Optional[FadingModel] = None, trials: int = 100, seed: int = 0, *,
                    stream: int = 0, synthesis: str = "clt", gain_method: str = "square",
                    gains: Optional[GainProfile] = None, workers: int = 1) -> McEstimate:
    """Dirty-paper capacity: mean of ``sum_k log2(1 + P Lambda_k/(K sigma^2) [G G^H]_kk)``."""
    _, dpc, _ = _paired_estimates(scenario, panel, budget, fading, trials, seed, stream,
                                  synthesis, gain_method, gains, workers)
    return dpc


def evaluate(scenario: Scenario, panel: RisPanel, budget: LinkBudget,
             fading: Optional[FadingModel] = None, trials: int = 100, seed: int = 0, *,
             stream: int = 0, synthesis: str = "clt", gain_method: str = "square",
             gains: Optional[GainProfile] = None, workers: int = 1) -> RateReport:
    """All estimators and bounds for one configuration, on shared channel draws."""
    zf, dpc, gains = _paired_estimates(scenario, panel, budget, fading, trials, seed, stream,
                                       synthesis, gain_method, gains, workers)
    m, k, gamma = scenario.num_antennas, scenario.num_users, panel.reflection_amplitude
    c_lim = capacity_limit(scenario, budget, gamma)
    return RateReport(
        per_user_rate=zf.per_user,
        sum_rate=zf.total,
        sum_rate_ci=zf.ci_halfwidth,
        dpc_capacity=dpc.total,
        dpc_capacity_ci=dpc.ci_halfwidth,
        upper_bound=capacity_upper_bound(gains, budget, m, k, gamma),
        capacity_limit=c_lim,
        epsilon=zf.total / c_lim if c_lim > 0 else 0.0,
        epsilon_hat=epsilon_hat(gains, budget, m, k, gamma),
        trials=trials,
        discarded=zf.discarded,
    )
