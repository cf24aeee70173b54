"""Zero-forcing precoding, per-user SNR and power allocation.

Functions accept a single ``(K, M)`` channel or a stack ``(..., K, M)``;
Monte Carlo code passes whole batches of trials at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, RankDeficientError

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Precoder:
    W: np.ndarray
    V: np.ndarray


@dataclass(frozen=True, eq=False)
class LinkBudget:
    transmit_power: float
    noise_power: float
    allocation: np.ndarray

    def __post_init__(self):
        alloc = np.asarray(self.allocation, dtype=float).reshape(-1)
        object.__setattr__(self, "allocation", alloc)
        if not self.transmit_power > 0 or not self.noise_power > 0:
            raise ValueError("transmit and noise power must be positive")
        if np.any(alloc < 0) or abs(alloc.sum() - 1.0) > 1e-12:
            raise ValueError(f"allocation must be nonnegative and sum to 1 (sum={alloc.sum()!r})")

    @classmethod
    def from_dbm(cls, power_dbm: float, noise_dbm: float, allocation) -> "LinkBudget":
        return cls(dbm_to_watts(power_dbm), dbm_to_watts(noise_dbm), allocation)

    @property
    def snr(self) -> float:
        return self.transmit_power / self.noise_power

    def with_power(self, transmit_power: float) -> "LinkBudget":
        return LinkBudget(transmit_power, self.noise_power, self.allocation)

    def with_allocation(self, allocation) -> "LinkBudget":
        return LinkBudget(self.transmit_power, self.noise_power, allocation)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _gram(G: np.ndarray) -> np.ndarray:
    return G @ np.conj(np.swapaxes(G, -1, -2))


def check_rank(G: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Smallest/largest singular value ratio per matrix; raises if any is below ``tol``."""
    s = np.linalg.svd(G, compute_uv=False)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(s[..., 0] > 0, s[..., -1] / s[..., 0], 0.0)
    if np.any(ratio < tol):
        raise RankDeficientError(float(np.min(ratio)), tol)
    return ratio


def zf_precoder(G: np.ndarray) -> Precoder:
    """``V = G^H (G G^H)^{-1}`` and its column-normalised version ``W``."""
    G = np.asarray(G, dtype=complex)
    check_rank(G)
    # (GG^H)^{-1} G, conjugate-transposed, equals G^H (GG^H)^{-1}
    V = np.conj(np.swapaxes(np.linalg.solve(_gram(G), G), -1, -2))
    W = V / np.linalg.norm(V, axis=-2, keepdims=True)
    return Precoder(W=W, V=V)


def _scale(budget: LinkBudget, k: int) -> np.ndarray:
    if budget.allocation.shape[0] != k:
        raise ValueError(f"allocation has {budget.allocation.shape[0]} entries for K={k}")
    return budget.transmit_power * budget.allocation / (k * budget.noise_power)


def snr_direct(G: np.ndarray, W: np.ndarray, budget: LinkBudget) -> np.ndarray:
    """``gamma_k = P Lambda_k / (K sigma^2) * |g_k w_k|^2``."""
    G = np.asarray(G)
    W = np.asarray(W)
    if G.shape[-1] != W.shape[-2] or G.shape[-2] != W.shape[-1]:
        raise ValueError(f"dimension mismatch: G {G.shape}, W {W.shape}")
    eff = np.einsum("...km,...mk->...k", G, W)
    return _scale(budget, G.shape[-2]) * np.abs(eff) ** 2


def inverse_gram_diagonal(G: np.ndarray) -> np.ndarray:
    gram = _gram(np.asarray(G, dtype=complex))
    try:
        inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("G G^H is singular") from exc
    return np.real(np.einsum("...kk->...k", inv))


def snr_closed(G: np.ndarray, budget: LinkBudget) -> np.ndarray:
    """``gamma_k = P Lambda_k / (K sigma^2 [(G G^H)^{-1}]_kk)``."""
    G = np.asarray(G)
    return _scale(budget, G.shape[-2]) / inverse_gram_diagonal(G)


def waterfill(effective_gains, transmit_power: float, noise_power: float) -> np.ndarray:
    """Allocation maximising ``sum_k log2(1 + P Lambda_k g_k / (K sigma^2))``.

    Returns ``Lambda_k = max(0, nu - K sigma^2 / (P g_k))`` with the water
    level ``nu`` set so the allocation sums to one.  Zero gains get no power.
    """
    g = np.asarray(effective_gains, dtype=float)
    if np.any(g < 0) or not np.any(g > 0):
        raise ValueError("effective gains must be nonnegative with at least one positive")
    k = g.size
    with np.errstate(divide="ignore"):
        floor = np.where(g > 0, k * noise_power / (transmit_power * g), np.inf)
    order = np.argsort(floor, kind="stable")
    sorted_floor = floor[order]
    alloc = np.zeros(k)
    n_pos = int(np.count_nonzero(np.isfinite(sorted_floor)))
    for active in range(n_pos, 0, -1):
        level = (1.0 + sorted_floor[:active].sum()) / active
        if level > sorted_floor[active - 1]:
            alloc[order[:active]] = level - sorted_floor[:active]
            break
    return alloc / alloc.sum()


def uniform_power(num_users: int) -> np.ndarray:
    if num_users < 1:
        raise ValueError("K must be at least 1")
    return np.full(num_users, 1.0 / num_users)
