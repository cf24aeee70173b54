"""Fading draws and assembly of the K x M channel matrix."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BudgetExceededError, GeometryDomainError
from .geometry import GainProfile, RisPanel, Scenario, aggregate_gain, lattice_offsets

FADING_KINDS = ("complex-gaussian", "uniform-phase-unit-modulus", "real-bernoulli-pm1")
DEFAULT_DRAW_BUDGET = 10**9
CLT_ADVISORY_N = 64


@dataclass(frozen=True)
class FadingModel:
    """Zero-mean, unit-second-moment small-scale fading law."""

    kind: str = "complex-gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in FADING_KINDS:
            raise ValueError(f"unknown fading kind {self.kind!r}; choose from {FADING_KINDS}")

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == "complex-gaussian":
            return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
        if self.kind == "uniform-phase-unit-modulus":
            return np.exp(2j * np.pi * rng.random(shape))
        return (2.0 * rng.integers(0, 2, size=shape) - 1.0).astype(complex)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    H: np.ndarray
    gains: GainProfile
    G: np.ndarray
    synthesis_mode: str
    metadata: dict = field(default_factory=dict)


def _assemble(H: np.ndarray, gains: GainProfile) -> np.ndarray:
    return np.sqrt(gains.per_user_average)[:, None] * H


def synthesize_exact(scenario: Scenario, panel: RisPanel, fading: FadingModel,
                     rng: np.random.Generator, gains: Optional[GainProfile] = None,
                     draw_budget: int = DEFAULT_DRAW_BUDGET,
                     per_element_weights: bool = False,
                     chunk: int = 1 << 20) -> ChannelRealization:
    """Sum ``h_n^{km} * Gamma_n`` over every element with fresh fading per path.

    With ``per_element_weights`` each path is additionally scaled by the
    square root of its own element gain, so ``G`` carries the per-element
    geometry; ``H`` is then reported as ``G`` divided by the common per-row
    scale so that ``G = sqrt(beta_bar) * H`` still holds.
    """
    k, m, n = scenario.num_users, scenario.num_antennas, panel.num_elements
    draws = k * m * n
    if draws > draw_budget:
        raise BudgetExceededError(
            f"exact synthesis needs {draws:.3g} fading draws (> {draw_budget:.3g}); "
            "use the CLT shortcut instead"
        )
    if gains is None:
        gains = aggregate_gain(scenario, panel)
    refl = panel.reflection_factors()

    weights = None
    if per_element_weights:
        from .geometry import _gain_density  # shared density kernel

        u, v = lattice_offsets(panel)
        uu, vv = np.meshgrid(u, v, indexing="xy")
        bs_uvz = tuple(scenario.to_frame(scenario.bs_position))
        area = panel.element_width * panel.element_height
        weights = np.stack([
            np.sqrt(area * _gain_density(uu.ravel(), vv.ravel(), bs_uvz, tuple(p),
                                         scenario.wavelength, scenario.antenna_gain))
            for p in scenario.to_frame(scenario.user_positions)
        ])  # (K, N)

    acc = np.zeros((k, m), dtype=complex)
    step = max(1, chunk // (k * m))
    for start in range(0, n, step):
        stop = min(n, start + step)
        h = fading.draw(rng, (k, m, stop - start))
        coeff = refl[start:stop]
        if weights is None:
            acc += h @ coeff
        else:
            acc += np.einsum("kmn,kn,n->km", h, weights[:, start:stop], coeff)

    if weights is None:
        H = acc
        G = _assemble(H, gains)
    else:
        G = acc
        scale = np.sqrt(gains.per_user_average)
        with np.errstate(divide="ignore", invalid="ignore"):
            H = np.where(scale[:, None] > 0, G / scale[:, None], 0.0)
    return ChannelRealization(H=H, gains=gains, G=G, synthesis_mode="exact-sum",
                              metadata={"per_element_weights": per_element_weights})


def synthesize_clt(scenario: Scenario, panel: RisPanel, rng: np.random.Generator,
                   gains: Optional[GainProfile] = None) -> ChannelRealization:
    """Draw each reflect-sum directly as CN(0, N * Gamma^2)."""
    k, m, n = scenario.num_users, scenario.num_antennas, panel.num_elements
    if gains is None:
        gains = aggregate_gain(scenario, panel)
    std = np.sqrt(n) * panel.reflection_amplitude
    z = (rng.standard_normal((k, m)) + 1j * rng.standard_normal((k, m))) / np.sqrt(2.0)
    H = std * z
    meta = {}
    if n < CLT_ADVISORY_N:
        meta["advisory"] = f"N={n} < {CLT_ADVISORY_N}: Gaussian approximation may be poor"
    return ChannelRealization(H=H, gains=gains, G=_assemble(H, gains),
                              synthesis_mode="clt-shortcut", metadata=meta)


def normalized_sum_samples(fading: FadingModel, panel: RisPanel, count: int,
                           chunk: int = 1 << 21) -> np.ndarray:
    """``count`` independent draws of ``sum_n h_n Gamma_n / (Gamma sqrt(N))``.

    The phase configuration is held fixed across draws; only the fading is
    redrawn.  Randomness comes from ``fading.seed``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    if panel.reflection_amplitude == 0:
        raise GeometryDomainError("Gamma = 0: the normalised sum is undefined")
    n = panel.num_elements
    refl = panel.reflection_factors()
    norm = panel.reflection_amplitude * np.sqrt(n)
    rng = np.random.default_rng(fading.seed)
    out = np.empty(count, dtype=complex)
    step = max(1, chunk // n)
    for start in range(0, count, step):
        stop = min(count, start + step)
        out[start:stop] = (fading.draw(rng, (stop - start, n)) @ refl) / norm
    return out
