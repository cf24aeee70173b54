"""Deployment layout, RIS lattice and per-element / aggregate path gains.

All gains are *power gains* (the reciprocal of a path loss), so a larger
number means a stronger link.  Positions are metres in a right-handed
world frame whose origin is the centre of the user area at ground level.

Inside the RIS frame the plane normal plays the role of the ``z`` axis,
``u``/``v`` span the surface, and the perpendicular distances of the BS and
of user ``k`` are called ``z0`` and ``zk``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, GeometryDomainError, InfeasibleGeometryError

SPEED_OF_LIGHT = 299_792_458.0

# lattice sums above this many elements are integrated over the footprint instead
LATTICE_SUM_LIMIT = 1 << 22

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


@dataclass(frozen=True, eq=False)
class Scenario:
    bs_position: np.ndarray
    user_positions: np.ndarray
    ris_center: np.ndarray
    ris_normal: np.ndarray
    wavelength: float
    antenna_gain: float
    num_antennas: int
    num_users: int

    def __post_init__(self):
        bs = np.asarray(self.bs_position, dtype=float).reshape(3)
        users = np.asarray(self.user_positions, dtype=float).reshape(-1, 3)
        center = np.asarray(self.ris_center, dtype=float).reshape(3)
        normal = np.asarray(self.ris_normal, dtype=float).reshape(3)
        norm = np.linalg.norm(normal)
        if norm == 0:
            raise GeometryDomainError("RIS normal must be nonzero")
        normal = normal / norm
        object.__setattr__(self, "bs_position", bs)
        object.__setattr__(self, "user_positions", users)
        object.__setattr__(self, "ris_center", center)
        object.__setattr__(self, "ris_normal", normal)

        if self.num_users < 1:
            raise GeometryDomainError("need at least one user")
        if len(users) != self.num_users:
            raise GeometryDomainError(
                f"{len(users)} user positions given for K={self.num_users}"
            )
        if self.num_antennas < self.num_users:
            raise GeometryDomainError(
                f"M={self.num_antennas} antennas cannot serve K={self.num_users} users"
            )
        if not self.wavelength > 0:
            raise GeometryDomainError("wavelength must be positive")
        if not self.antenna_gain > 0:
            raise GeometryDomainError("antenna gain must be positive")
        if self.bs_distance <= 0:
            raise GeometryDomainError("BS is not in front of the RIS plane")
        if np.any(self.user_distances <= 0):
            bad = np.flatnonzero(self.user_distances <= 0).tolist()
            raise GeometryDomainError(f"users {bad} are not in front of the RIS plane")

    def frame(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Orthonormal ``(u, v, n)`` axes of the RIS plane."""
        return plane_axes(self.ris_normal)

    def to_frame(self, points: np.ndarray) -> np.ndarray:
        """Express world points as ``(u, v, z)`` RIS-frame coordinates."""
        u, v, n = self.frame()
        rel = np.asarray(points, dtype=float) - self.ris_center
        return np.stack([rel @ u, rel @ v, rel @ n], axis=-1)

    @property
    def bs_distance(self) -> float:
        return float((self.bs_position - self.ris_center) @ self.ris_normal)

    @property
    def user_distances(self) -> np.ndarray:
        return (self.user_positions - self.ris_center) @ self.ris_normal

    def with_antennas(self, num_antennas: int) -> "Scenario":
        return replace(self, num_antennas=int(num_antennas))


@dataclass(frozen=True)
class LayoutParams:
    """Top-view layout of the service area, the RIS and the BS."""

    bs_ris_distance: float = 100.0
    bs_area_distance: float = 100.0
    ris_area_gap: float = 10.0
    area_side: float = 100.0
    bs_height: float = 25.0
    ris_height: float = 25.0
    num_users: int = 5
    user_seed: int = 0


@dataclass(frozen=True)
class RisPanel:
    num_elements: int
    element_width: float = 0.02
    element_height: float = 0.02
    reflection_amplitude: float = 1.0
    phase_mode: str = "zero"  # "zero" | "random" | "explicit"
    phase_seed: int = 0
    phases: Optional[tuple] = None

    def __post_init__(self):
        if int(self.num_elements) != self.num_elements or self.num_elements < 1:
            raise GeometryDomainError(f"N must be a positive integer, got {self.num_elements}")
        object.__setattr__(self, "num_elements", int(self.num_elements))
        if not 0.0 <= self.reflection_amplitude <= 1.0:
            raise GeometryDomainError("reflection amplitude must lie in [0, 1]")
        if self.element_width <= 0 or self.element_height <= 0:
            raise GeometryDomainError("element size must be positive")
        if self.phase_mode not in ("zero", "random", "explicit"):
            raise GeometryDomainError(f"unknown phase mode {self.phase_mode!r}")
        if self.phase_mode == "explicit":
            if self.phases is None or len(self.phases) != self.num_elements:
                raise GeometryDomainError("explicit phase list must have length N")
            object.__setattr__(self, "phases", tuple(float(t) for t in self.phases))

    @property
    def pitch(self) -> float:
        """Equivalent square element side, sqrt(a*b)."""
        return math.sqrt(self.element_width * self.element_height)

    def with_elements(self, num_elements: int) -> "RisPanel":
        phases = self.phases if self.phase_mode == "explicit" else None
        return replace(self, num_elements=int(num_elements), phases=phases)

    def phase_shifts(self) -> np.ndarray:
        n = self.num_elements
        if self.phase_mode == "zero":
            return np.zeros(n)
        if self.phase_mode == "random":
            return np.random.default_rng(self.phase_seed).uniform(0.0, 2 * np.pi, n)
        return np.asarray(self.phases, dtype=float)

    def reflection_factors(self) -> np.ndarray:
        """Per-element factors Gamma * exp(-j theta_n)."""
        return self.reflection_amplitude * np.exp(-1j * self.phase_shifts())


@dataclass(frozen=True, eq=False)
class GainProfile:
    per_user_aggregate: np.ndarray
    num_elements: int
    asymptotic_limit: np.ndarray
    method: str = "lattice"
    metadata: dict = field(default_factory=dict)

    @property
    def per_user_average(self) -> np.ndarray:
        return self.per_user_aggregate / self.num_elements


@dataclass(frozen=True)
class PanelShape:
    rows: int
    cols: int
    width: float
    height: float
    side_length: float


def plane_axes(normal) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    u = np.cross([0.0, 0.0, 1.0], n)
    if np.linalg.norm(u) < 1e-12:
        u = np.array([1.0, 0.0, 0.0])
    u = u / np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v, n


def grid_shape(num_elements: int) -> tuple[int, int]:
    """Most-square factorisation ``rows * cols == N`` with ``rows <= cols``."""
    n = int(num_elements)
    if n < 1:
        raise GeometryDomainError("N must be positive")
    root = math.isqrt(n)
    candidates = np.arange(1, root + 1, dtype=np.int64)
    rows = int(candidates[n % candidates == 0].max())
    return rows, n // rows


def lattice_offsets(panel: RisPanel) -> tuple[np.ndarray, np.ndarray]:
    """In-plane ``u`` (column) and ``v`` (row) offsets of the centred lattice."""
    rows, cols = grid_shape(panel.num_elements)
    u = (np.arange(cols) - (cols - 1) / 2.0) * panel.element_width
    v = (np.arange(rows) - (rows - 1) / 2.0) * panel.element_height
    return u, v


def element_positions(panel: RisPanel, center, normal) -> np.ndarray:
    """World coordinates of every element, shape ``(N, 3)``."""
    u_ax, v_ax, _ = plane_axes(normal)
    u, v = lattice_offsets(panel)
    uu, vv = np.meshgrid(u, v, indexing="xy")
    pts = np.asarray(center, dtype=float) + uu.reshape(-1, 1) * u_ax + vv.reshape(-1, 1) * v_ax
    return pts


def panel_from_count(num_elements: int, element_width: float, element_height: Optional[float] = None) -> PanelShape:
    """Physical size of a panel holding ``N`` elements.

    ``side_length`` is the side of the square with the same area,
    ``sqrt(N * a * b)``; ``width``/``height`` describe the most-square lattice.
    """
    b = element_width if element_height is None else element_height
    rows, cols = grid_shape(num_elements)
    return PanelShape(
        rows=rows,
        cols=cols,
        width=cols * element_width,
        height=rows * b,
        side_length=math.sqrt(num_elements * element_width * b),
    )


def build_layout(params: LayoutParams, frequency: float, antenna_gain: float,
                 num_antennas: int, num_users: Optional[int] = None) -> Scenario:
    """Place the area, RIS and BS and drop the users.

    The user square is centred on the origin.  The RIS sits on the ``-x`` side,
    ``ris_area_gap`` away from the nearest edge, and faces the area centre.  The
    BS is the ``y > 0`` intersection of the two horizontal-distance circles
    around the RIS (``bs_ris_distance``) and the area centre
    (``bs_area_distance``).
    """
    k = params.num_users if num_users is None else int(num_users)
    if k != params.num_users:
        raise GeometryDomainError(f"K={k} does not match layout num_users={params.num_users}")
    for name in ("bs_ris_distance", "bs_area_distance", "ris_area_gap", "area_side"):
        if getattr(params, name) <= 0:
            raise InfeasibleGeometryError(f"{name} must be positive")
    if frequency <= 0:
        raise GeometryDomainError("carrier frequency must be positive")

    ris_x = -(params.area_side / 2.0 + params.ris_area_gap)
    d_b, d = params.bs_ris_distance, params.bs_area_distance
    # (x - ris_x)^2 + y^2 = d_b^2 and x^2 + y^2 = d^2
    x = (d_b**2 - d**2 - ris_x**2) / (-2.0 * ris_x)
    y_sq = d**2 - x**2
    if y_sq < 0:
        raise InfeasibleGeometryError(
            f"no BS position is {d_b} m from the RIS and {d} m from the area centre"
        )
    bs = np.array([x, math.sqrt(y_sq), params.bs_height])
    ris = np.array([ris_x, 0.0, params.ris_height])

    rng = np.random.default_rng(params.user_seed)
    half = params.area_side / 2.0
    xy = rng.uniform(-half, half, size=(k, 2))
    users = np.column_stack([xy, np.zeros(k)])

    return Scenario(
        bs_position=bs,
        user_positions=users,
        ris_center=ris,
        ris_normal=np.array([1.0, 0.0, 0.0]),
        wavelength=SPEED_OF_LIGHT / frequency,
        antenna_gain=antenna_gain,
        num_antennas=num_antennas,
        num_users=k,
    )


def _gain_density(u, v, bs_uvz, user_uvz, wavelength, antenna_gain):
    """Received-power fraction per unit RIS area at in-plane point ``(u, v)``."""
    bu, bv, z0 = bs_uvz
    uu, uv, zk = user_uvz
    l2 = (u - bu) ** 2 + (v - bv) ** 2 + z0 * z0
    d2 = (u - uu) ** 2 + (v - uv) ** 2 + zk * zk
    return antenna_gain * z0**3 * wavelength**2 / (64.0 * np.pi**3 * d2 * l2**2.5)


def path_gain(element, bs, user, panel: RisPanel, wavelength: float,
              antenna_gain: float, normal=(0.0, 0.0, 1.0)) -> float:
    """Power gain BS -> element -> user for one reflective element.

    ``A a b lambda^2 cos^3(alpha) / (64 pi^3 l^2 d^2)`` with ``l``/``d`` the
    element-BS and element-user distances and ``alpha`` the incidence angle
    from the plane normal.
    """
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    e = np.asarray(element, dtype=float)
    to_bs = np.asarray(bs, dtype=float) - e
    to_user = np.asarray(user, dtype=float) - e
    l = float(np.linalg.norm(to_bs))
    d = float(np.linalg.norm(to_user))
    if l == 0 or d == 0:
        raise GeometryDomainError("element coincides with the BS or the user")
    cos_a = float(to_bs @ n) / l
    if cos_a <= 0 or float(to_user @ n) <= 0:
        raise GeometryDomainError("BS or user is behind the RIS plane")
    area = panel.element_width * panel.element_height
    return antenna_gain * area * wavelength**2 * cos_a**3 / (64.0 * math.pi**3 * l**2 * d**2)


def asymptotic_gain(z0: float, zk: float, wavelength: float, antenna_gain: float) -> float:
    """Closed-form N -> infinity aggregate gain, ``2 A z0^3 lambda^2 / (5 pi^2 (z0+zk)^5)``.

    Evaluated as written, with its 2/5 coefficient.  Integrating the same midpoint density
    over the whole plane gives half of this value; see
    :func:`quadrature_gain`.
    """
    if z0 <= 0 or zk <= 0:
        raise GeometryDomainError("perpendicular distances must be positive")
    return 2.0 * antenna_gain * z0**3 * wavelength**2 / (5.0 * math.pi**2 * (z0 + zk) ** 5)


def _lattice_sum(u, v, bs_uvz, user_uvz, area, wavelength, antenna_gain, chunk=1 << 21):
    rows_per_chunk = max(1, chunk // len(u))
    total = 0.0
    for start in range(0, len(v), rows_per_chunk):
        vv = v[start:start + rows_per_chunk, None]
        total += float(np.sum(_gain_density(u[None, :], vv, bs_uvz, user_uvz, wavelength, antenna_gain)))
    return total * area


def _graded_breaks(lo: float, hi: float, features: Sequence[float], scale: float) -> np.ndarray:
    """Panel edges on [lo, hi], refined near ``features`` and coarse far away."""
    pts = sorted({lo, hi, *(f for f in features if lo < f < hi)})
    out = [pts[0]]
    feats = np.asarray(list(features), dtype=float)
    stack = [(a, b) for a, b in zip(pts[:-1], pts[1:])][::-1]
    while stack:
        a, b = stack.pop()
        if feats.size:
            dist = np.min(np.maximum(0.0, np.maximum(feats - b, a - feats)))
        else:
            dist = np.inf
        if b - a > 0.5 * (scale + dist):
            mid = 0.5 * (a + b)
            stack.append((mid, b))
            stack.append((a, mid))
        else:
            out.append(b)
    return np.asarray(out)


def _gauss_nodes(breaks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b = breaks[:-1, None], breaks[1:, None]
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (a + b)
    w = 0.5 * (b - a) * _GL_WEIGHTS
    return x.ravel(), w.ravel()


def footprint_integral(half_u: float, half_v: float, bs_uvz, user_uvz,
                       wavelength: float, antenna_gain: float) -> float:
    """Integral of the gain density over ``[-half_u, half_u] x [-half_v, half_v]``.

    Composite tensor Gauss-Legendre on panels graded around the in-plane
    projections of the BS and the user.  Used as the continuum value of a
    lattice sum whose pitch is far below the link distances.
    """
    if half_u <= 0 or half_v <= 0:
        return 0.0
    scale = min(bs_uvz[2], user_uvz[2])
    bu = _graded_breaks(-half_u, half_u, [bs_uvz[0], user_uvz[0], 0.0], scale)
    bv = _graded_breaks(-half_v, half_v, [bs_uvz[1], user_uvz[1], 0.0], scale)
    xu, wu = _gauss_nodes(bu)
    xv, wv = _gauss_nodes(bv)
    total = 0.0
    step = max(1, (1 << 20) // len(xu))
    for s in range(0, len(xv), step):
        dens = _gain_density(xu[None, :], xv[s:s + step, None], bs_uvz, user_uvz, wavelength, antenna_gain)
        total += float(wv[s:s + step] @ dens @ wu)
    return total


def aggregate_gain(scenario: Scenario, panel: RisPanel, method: str = "auto") -> GainProfile:
    """Per-user sum of element gains over the whole panel.

    ``method``:

    * ``"lattice"`` -- direct sum over every element of the most-square grid.
    * ``"footprint"`` -- integral of the gain density over that grid's
      rectangular footprint (the continuum limit of the lattice sum).
    * ``"square"`` -- integral over a square of area ``N a b``.  Unlike the
      lattice this is strictly increasing in ``N``, which sweeps and the
      element-count search rely on.
    * ``"auto"`` -- lattice up to ``LATTICE_SUM_LIMIT`` elements, footprint
      beyond.
    """
    n = panel.num_elements
    if method == "auto":
        method = "lattice" if n <= LATTICE_SUM_LIMIT else "footprint"
    bs_uvz = tuple(scenario.to_frame(scenario.bs_position))
    users_uvz = scenario.to_frame(scenario.user_positions)
    lam, a_gain = scenario.wavelength, scenario.antenna_gain
    area = panel.element_width * panel.element_height

    if method == "lattice":
        u, v = lattice_offsets(panel)
        agg = [_lattice_sum(u, v, bs_uvz, tuple(p), area, lam, a_gain) for p in users_uvz]
    elif method == "footprint":
        rows, cols = grid_shape(n)
        hu, hv = cols * panel.element_width / 2.0, rows * panel.element_height / 2.0
        agg = [footprint_integral(hu, hv, bs_uvz, tuple(p), lam, a_gain) for p in users_uvz]
    elif method == "square":
        half = math.sqrt(n * area) / 2.0
        agg = [footprint_integral(half, half, bs_uvz, tuple(p), lam, a_gain) for p in users_uvz]
    else:
        raise ValueError(f"unknown aggregation method {method!r}")

    limit = np.array([asymptotic_gain(bs_uvz[2], p[2], lam, a_gain) for p in users_uvz])
    return GainProfile(np.asarray(agg, dtype=float), n, limit, method=method)


def plane_limit_gain(scenario: Scenario) -> np.ndarray:
    """Per-user aggregate of an unbounded panel, exact density, by quadrature."""
    bs_uvz = tuple(scenario.to_frame(scenario.bs_position))
    out = []
    for p in scenario.to_frame(scenario.user_positions):
        reach = 1e4 * (bs_uvz[2] + p[2] + abs(bs_uvz[0]) + abs(bs_uvz[1]) + abs(p[0]) + abs(p[1]))
        out.append(footprint_integral(reach, reach, bs_uvz, tuple(p), scenario.wavelength, scenario.antenna_gain))
    return np.asarray(out)


def quadrature_gain(z0: float, zk: float, x0: float, wavelength: float, antenna_gain: float,
                    panel_halfwidth: float, use_midpoint_approx: bool = False,
                    rtol: float = 1e-6, max_refinements: int = 6) -> float:
    """Adaptive iterated quadrature of the gain density over ``[-w, w]^2``.

    BS at ``(-x0, 0, z0)`` and user at ``(x0, 0, zk)`` in the RIS frame.
    With ``use_midpoint_approx`` both distances are replaced by the distance
    to the point midway between them, ``x^2 + y^2 + (z0+zk)^2/4``.  The
    requested accuracy is tightened until two successive estimates agree to
    ``rtol``.  ``panel_halfwidth`` may be ``inf``.
    """
    w = float(panel_halfwidth)
    if w < 0:
        raise GeometryDomainError("panel half-width must be nonnegative")
    if w == 0:
        return 0.0
    if z0 <= 0 or zk <= 0:
        raise GeometryDomainError("perpendicular distances must be positive")
    coef = antenna_gain * z0**3 * wavelength**2 / (64.0 * math.pi**3)
    c2 = (z0 + zk) ** 2 / 4.0

    if use_midpoint_approx:
        def density(x, y):
            return coef / (x * x + y * y + c2) ** 3.5
    else:
        def density(x, y):
            l2 = (x + x0) ** 2 + y * y + z0 * z0
            d2 = (x - x0) ** 2 + y * y + zk * zk
            return coef / (d2 * l2**2.5)

    finite = math.isfinite(w)
    x_points = [-x0, x0] if finite else None

    def estimate(eps):
        def inner(y):
            kw = {"points": x_points} if finite else {}
            return integrate.quad(density, -w, w, args=(y,), epsabs=0.0, epsrel=eps, limit=200, **kw)[0]
        kw = {"points": [0.0]} if finite else {}
        return integrate.quad(inner, -w, w, epsabs=0.0, epsrel=eps, limit=200, **kw)[0]

    eps = 1e-5
    prev = estimate(eps)
    for _ in range(max_refinements):
        eps /= 10.0
        cur = estimate(eps)
        if cur == prev or abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise ConvergenceError(f"quadrature did not settle to rtol={rtol} after {max_refinements} refinements")
