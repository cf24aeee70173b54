"""Minimum number of reflective elements reaching a target rate ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import GeometryDomainError
from .geometry import RisPanel, Scenario, aggregate_gain, plane_limit_gain
from .precoding import LinkBudget
from .rates import asymptotic_gains, epsilon_hat_from_aggregate

DEFAULT_SEARCH_CAP = 10**10
HIGH_SNR_MARGIN = 10.0


@dataclass(frozen=True, eq=False)
class PlanRequest:
    target_ratio: float
    scenario: Scenario
    panel: RisPanel
    budget: LinkBudget
    search_cap: int = DEFAULT_SEARCH_CAP

    def __post_init__(self):
        if not 0.0 < self.target_ratio < 1.0:
            raise ValueError(f"target ratio must lie in (0, 1), got {self.target_ratio}")

    @property
    def mu(self) -> float:
        return self.scenario.num_antennas / self.scenario.num_users

    @property
    def gamma(self) -> float:
        return self.panel.reflection_amplitude


@dataclass(frozen=True, eq=False)
class PlanResult:
    n_required: Optional[int]
    method: str
    epsilon_at_n: float
    high_snr_valid: bool
    side_length: float
    feasible: bool
    epsilon_limit: float = float("nan")
    capped: bool = False
    high_snr_per_user: tuple = ()
    extra: dict = field(default_factory=dict)


def _infeasible(method: str, limit: float = 0.0, capped: bool = False, **extra) -> PlanResult:
    return PlanResult(None, method, float("nan"), False, float("nan"), False,
                      epsilon_limit=limit, capped=capped, extra=extra)


def high_snr_flags(request: PlanRequest, per_element_gain, n: int) -> np.ndarray:
    b = request.budget
    base = b.snr * b.allocation * request.gamma**2
    k = request.scenario.num_users
    lhs = base * np.asarray(per_element_gain) * n * (request.mu - 1.0)
    rhs = base * request.mu * asymptotic_gains(request.scenario)
    return (lhs > HIGH_SNR_MARGIN * k) & (rhs > HIGH_SNR_MARGIN * k)


def closed_form_count(limit_terms: Sequence[float], element_terms: Sequence[float], eta: float) -> float:
    """``(prod_k limit_k^eta / element_k)^(1/K)`` evaluated in log space.

    ``limit_k = (P/sigma^2) Lambda_k Gamma^2 mu beta_tilde_k`` and
    ``element_k = (P/sigma^2) Lambda_k Gamma^2 beta_bar_k (mu - 1)``.
    """
    lt = np.asarray(limit_terms, dtype=float)
    et = np.asarray(element_terms, dtype=float)
    return float(np.exp(np.mean(eta * np.log(lt) - np.log(et))))


def min_elements_closed_form(request: PlanRequest, per_element_gain: Sequence[float]) -> PlanResult:
    """High-SNR element count for a caller-pinned per-element gain ``beta_bar_k``."""
    mu = request.mu
    if mu <= 1.0:
        return _infeasible("closed-form", 0.0)
    pe = np.asarray(per_element_gain, dtype=float)
    if np.any(pe <= 0):
        raise GeometryDomainError("per-element gains must be positive")
    b = request.budget
    base = b.snr * b.allocation * request.gamma**2
    limit_terms = base * mu * asymptotic_gains(request.scenario)
    element_terms = base * pe * (mu - 1.0)
    n = max(1, math.ceil(closed_form_count(limit_terms, element_terms, request.target_ratio) - 1e-9))
    flags = high_snr_flags(request, pe, n)
    eps = epsilon_hat_from_aggregate(pe * n, asymptotic_gains(request.scenario), b,
                                     request.scenario.num_antennas, request.scenario.num_users,
                                     request.gamma)
    return PlanResult(n, "closed-form", eps, bool(flags.all()),
                      math.sqrt(n) * request.panel.pitch, True,
                      high_snr_per_user=tuple(bool(f) for f in flags))


def reference_per_element_gain(request: PlanRequest, n_ref: int) -> np.ndarray:
    """Average per-element gain ``aggregate(n_ref) / n_ref`` of a square panel."""
    g = aggregate_gain(request.scenario, request.panel.with_elements(n_ref), method="square")
    return g.per_user_average


def min_elements_self_consistent(request: PlanRequest) -> PlanResult:
    """Closed form with ``beta_bar_k`` evaluated at the count it returns.

    The closed form's right-hand side depends on ``N`` through the average
    element gain.  Substituting ``beta_bar_k = aggregate_k(N) / N`` turns the
    inequality into ``geomean_k(element_k(N) * N) >= geomean_k(limit_k^eta)``,
    whose left side is increasing in ``N``; the smallest such ``N`` is found
    by bisection.
    """
    if request.mu <= 1.0:
        return _infeasible("closed-form", 0.0)

    def count_at(n: int) -> float:
        return closed_form_count_for(request, reference_per_element_gain(request, n))

    hi = 1
    while count_at(hi) > hi:
        hi *= 2
        if hi > request.search_cap:
            return _infeasible("closed-form", capped=True)
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if count_at(mid) > mid:
            lo = mid
        else:
            hi = mid
    n = hi
    res = min_elements_closed_form(request, reference_per_element_gain(request, n))
    return PlanResult(n, "closed-form", _eps_at(request, n), res.high_snr_valid,
                      math.sqrt(n) * request.panel.pitch, True,
                      high_snr_per_user=res.high_snr_per_user)


def closed_form_count_for(request: PlanRequest, per_element_gain) -> float:
    b = request.budget
    base = b.snr * b.allocation * request.gamma**2
    return closed_form_count(base * request.mu * asymptotic_gains(request.scenario),
                             base * np.asarray(per_element_gain) * (request.mu - 1.0),
                             request.target_ratio)


def _eps_at(request: PlanRequest, n: int) -> float:
    s = request.scenario
    g = aggregate_gain(s, request.panel.with_elements(n), method="square")
    return epsilon_hat_from_aggregate(g.per_user_aggregate, g.asymptotic_limit, request.budget,
                                      s.num_antennas, s.num_users, request.gamma)


def epsilon_hat_limit(request: PlanRequest) -> float:
    """Supremum of the ratio bound over ``N``: aggregate replaced by its unbounded-panel value."""
    s = request.scenario
    return epsilon_hat_from_aggregate(plane_limit_gain(s), asymptotic_gains(s), request.budget,
                                      s.num_antennas, s.num_users, request.gamma)


def min_elements_search(request: PlanRequest) -> PlanResult:
    """Smallest integer ``N`` whose ratio bound reaches the target.

    Square panels make the aggregate, hence the bound, strictly increasing
    in ``N``, so doubling followed by integer bisection is exact.
    """
    eta = request.target_ratio
    if request.mu <= 1.0:
        return _infeasible("search", 0.0)
    limit = epsilon_hat_limit(request)
    if not eta < limit:
        return _infeasible("search", limit)

    hi = 1
    eps_hi = _eps_at(request, hi)
    while eps_hi < eta:
        if hi >= request.search_cap:
            return _infeasible("search", limit, capped=True)
        hi = min(2 * hi, request.search_cap)
        eps_hi = _eps_at(request, hi)
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        e = _eps_at(request, mid)
        if e >= eta:
            hi, eps_hi = mid, e
        else:
            lo = mid
    n = hi
    pe = reference_per_element_gain(request, n)
    flags = high_snr_flags(request, pe, n)
    return PlanResult(n, "search", eps_hi, bool(flags.all()), math.sqrt(n) * request.panel.pitch,
                      True, epsilon_limit=limit, high_snr_per_user=tuple(bool(f) for f in flags),
                      extra={"epsilon_below": _eps_at(request, n - 1) if n > 1 else 0.0})
