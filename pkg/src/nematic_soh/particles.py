"""Stochastic particle model with nematic alignment and optional reversals.

N particles move at constant speed ``v0`` in a periodic square box of side
``L``. Each heading relaxes toward the local mean *line* ``Theta_bar_i`` of its
neighbors (disc of radius ``R``, self included), with angular noise that
vanishes perpendicular to that line:

    dTheta = -nu Sign(cos phi) sin phi dt + sqrt(2 d) |cos phi| dW,
    phi = Theta - Theta_bar_i.

The SDE is read in the sense whose Fokker-Planck operator is
``d/dtheta (d cos^2 df/dtheta + nu Sign(cos) sin f)``; its stationary law is
the generalized von Mises density with ``kappa = nu/d``. Discretized with
Euler-Maruyama in Ito form, this requires the extra drift ``-d sin(2 phi)``
(the noise-induced term of the multiplicative ``|cos|`` amplitude).

With reversals enabled, a particle on the ``+`` side of ``Theta_bar_i`` turns
around (``Theta -> Theta + pi``) at Poisson rate ``lambda(rho_-)``, and vice
versa, with ``lambda(rho) = lambda1 rho^2 + lambda0``.

Neighbor search uses a vectorized cell list (cell side >= R). When
``R >= L/sqrt(2)`` every particle is a neighbor of every other and the sums
collapse to global ones. A brute-force all-pairs path is kept as a reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .gvm import GvmParams, sample, wrap_angle, wrap_line
from .numerics import RandomStream

ISOTROPIC_TOL = 1e-12
# |cos(theta - Theta_bar)| at or below this counts as exactly on the boundary line
BOUNDARY_TOL = 1e-12
_BRUTE_CHUNK = 2_000_000


@dataclass(frozen=True)
class SimParams:
    n: int
    box_length: float
    radius: float
    v0: float = 1.0
    nu: float = 1.0
    d_noise: float = 0.5
    dt: float = 0.01
    reversals: bool = False
    lambda0: float = 0.0
    lambda1: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"SimParams: n must be a positive integer, got {self.n}")
        if not self.box_length > 0:
            raise ValueError(f"SimParams: box_length must be > 0, got {self.box_length}")
        if not self.radius > 0:
            raise ValueError(f"SimParams: radius must be > 0, got {self.radius}")
        if not (self.radius < self.box_length / 2 or self.global_interaction):
            raise ValueError(
                f"SimParams: radius {self.radius} must be < box_length/2 "
                f"(or >= box_length/sqrt(2) for all-to-all interaction)")
        for name in ("v0", "nu", "d_noise", "lambda0", "lambda1"):
            if getattr(self, name) < 0:
                raise ValueError(f"SimParams: {name} must be >= 0, got {getattr(self, name)}")
        if not self.dt > 0:
            raise ValueError(f"SimParams: dt must be > 0, got {self.dt}")
        if self.dt * self.nu > 0.1 + 1e-12:
            raise ValueError(f"SimParams: dt*nu = {self.dt * self.nu} exceeds 0.1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("SimParams: seed must fit in 64 bits")

    @property
    def global_interaction(self) -> bool:
        """True when the disc covers the whole periodic box."""
        return self.radius >= self.box_length / math.sqrt(2)

    @property
    def neighborhood_area(self) -> float:
        """Area used to turn neighbor counts into densities."""
        if self.global_interaction:
            return self.box_length**2
        return math.pi * self.radius**2

    @property
    def kappa(self) -> float:
        """Effective GVM concentration ``nu / d``."""
        return self.nu / self.d_noise if self.d_noise > 0 else math.inf

    def reversal_rate(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        return self.lambda1 * rho * rho + self.lambda0


@dataclass(frozen=True, eq=False)
class ParticleState:
    positions: np.ndarray  # shape (n, 2)
    angles: np.ndarray  # shape (n,)
    time: float = 0.0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        ang = np.asarray(self.angles, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or ang.shape != (pos.shape[0],):
            raise ValueError("ParticleState: positions must be (n, 2) and angles (n,)")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "angles", ang)

    @property
    def n(self) -> int:
        return self.angles.size

    def copy(self) -> "ParticleState":
        return ParticleState(self.positions.copy(), self.angles.copy(), self.time)


def check_state(state: ParticleState, params: SimParams) -> None:
    if state.n != params.n:
        raise ValueError(f"state has {state.n} particles, params say {params.n}")
    L = params.box_length
    if np.any(state.positions < 0) or np.any(state.positions >= L):
        raise ValueError("positions outside [0, L)")
    if np.any(state.angles < -math.pi) or np.any(state.angles >= math.pi):
        raise ValueError("angles outside [-pi, pi)")


# ---------------------------------------------------------------- nematic means

def doubled_current(angles) -> np.ndarray:
    """``J = sum_k (cos 2theta_k, sin 2theta_k)``."""
    a = np.asarray(angles, dtype=float)
    return np.array([np.cos(2 * a).sum(), np.sin(2 * a).sum()])


def nematic_mean_angle(angles) -> float | None:
    """Mean line angle in [-pi/2, pi/2), or ``None`` for an isotropic set.

    Half the polar angle of ``J``; isotropic means ``|J| < 1e-12``
    relative to the number of angles.
    """
    a = np.asarray(angles, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("nematic_mean_angle needs at least one angle")
    jx, jy = doubled_current(a)
    if math.hypot(jx, jy) < ISOTROPIC_TOL * a.size:
        return None
    return float(wrap_line(0.5 * math.atan2(jy, jx)))


def nematic_order(angles) -> float:
    """``|sum v(2 theta_k)| / N``."""
    a = np.asarray(angles, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("nematic_order needs at least one angle")
    return float(min(1.0, math.hypot(*doubled_current(a)) / a.size))


# ---------------------------------------------------------------- neighbor search

def _min_image(d: np.ndarray, L: float) -> np.ndarray:
    return d - L * np.round(d / L)


def _close(pos: np.ndarray, i: np.ndarray, j: np.ndarray, L: float, r2: float) -> np.ndarray:
    dx = _min_image(pos[j, 0] - pos[i, 0], L)
    dy = _min_image(pos[j, 1] - pos[i, 1], L)
    return dx * dx + dy * dy <= r2


def neighbor_pairs_brute(pos: np.ndarray, L: float, R: float) -> tuple[np.ndarray, np.ndarray]:
    """All unordered neighbor pairs ``i < j`` by checking every pair, O(N^2)."""
    n = pos.shape[0]
    rows = max(1, _BRUTE_CHUNK // n)
    out_i, out_j = [], []
    for start in range(0, n, rows):
        stop = min(n, start + rows)
        i = np.repeat(np.arange(start, stop), n)
        j = np.tile(np.arange(n), stop - start)
        upper = j > i
        i, j = i[upper], j[upper]
        keep = _close(pos, i, j, L, R * R)
        out_i.append(i[keep])
        out_j.append(j[keep])
    return np.concatenate(out_i), np.concatenate(out_j)


# forward half of the 9-cell stencil; (0, 0) is handled with j > i
_HALF_STENCIL = ((0, 0), (1, -1), (1, 0), (1, 1), (0, 1))


def neighbor_pairs_cells(pos: np.ndarray, L: float, R: float) -> tuple[np.ndarray, np.ndarray]:
    """Same pairs as :func:`neighbor_pairs_brute` via a periodic cell list.

    Particles are sorted by cell so each neighbor cell is a contiguous index
    range; a half stencil visits every unordered pair once. Needs at least
    3 cells per side, otherwise falls back to the brute-force path.
    """
    m = int(L // R)
    if m < 3:
        return neighbor_pairs_brute(pos, L, R)
    n = pos.shape[0]
    cell_xy = np.minimum((pos * (m / L)).astype(np.int64), m - 1)
    cid = cell_xy[:, 0] * m + cell_xy[:, 1]
    order = np.argsort(cid, kind="stable")
    ps = pos[order]
    cxy = cell_xy[order]
    sorted_cid = cid[order]
    starts = np.searchsorted(sorted_cid, np.arange(m * m), side="left")
    ends = np.searchsorted(sorted_cid, np.arange(m * m), side="right")
    ids = np.arange(n)
    r2 = R * R
    out_i, out_j = [], []
    for ox, oy in _HALF_STENCIL:
        nx, ny = cxy[:, 0] + ox, cxy[:, 1] + oy
        # displacement of the periodic image the stencil actually points at
        sx = np.where(nx >= m, L, 0.0)
        sy = np.where(ny >= m, L, np.where(ny < 0, -L, 0.0))
        ncell = (nx % m) * m + ny % m
        s = starts[ncell]
        if ox == 0 and oy == 0:
            s = ids + 1  # same cell: only later particles
        cnt = np.maximum(ends[ncell] - s, 0)
        total = int(cnt.sum())
        if total == 0:
            continue
        i = np.repeat(ids, cnt)
        j = np.repeat(s - (np.cumsum(cnt) - cnt), cnt) + np.arange(total)
        dx = ps[j, 0] + sx[i] - ps[i, 0]
        dy = ps[j, 1] + sy[i] - ps[i, 1]
        keep = dx * dx + dy * dy <= r2
        out_i.append(i[keep])
        out_j.append(j[keep])
    if not out_i:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    i = order[np.concatenate(out_i)]
    j = order[np.concatenate(out_j)]
    return np.minimum(i, j), np.maximum(i, j)


def neighbor_pairs(pos: np.ndarray, params: SimParams, method: str = "auto"):
    if method == "brute":
        return neighbor_pairs_brute(pos, params.box_length, params.radius)
    if method in ("auto", "cells"):
        return neighbor_pairs_cells(pos, params.box_length, params.radius)
    raise ValueError(f"unknown neighbor method {method!r}")


def _pair_sum(i, j, w, n):
    """``sum over neighbors k of i`` of ``w[k]`` for symmetric pairs, self included."""
    return w + np.bincount(i, weights=w[j], minlength=n) + np.bincount(j, weights=w[i], minlength=n)


def local_means(state: ParticleState, params: SimParams, method: str = "auto",
                densities: bool = True):
    """Per-particle ``(Theta_bar_i, isotropic_i, rho_plus_i, rho_minus_i)``.

    ``Theta_bar_i`` is NaN where the neighborhood is isotropic; such
    particles get all neighbors counted on the plus side. With
    ``densities=False`` the two density arrays are ``None``.
    """
    n = state.n
    theta = state.angles
    c2, s2 = np.cos(2 * theta), np.sin(2 * theta)
    global_mode = params.global_interaction and method != "brute"
    if global_mode:
        jx = np.full(n, c2.sum())
        jy = np.full(n, s2.sum())
        counts = np.full(n, float(n))
    else:
        pi, pj = neighbor_pairs(state.positions, params, method)
        jx = _pair_sum(pi, pj, c2, n)
        jy = _pair_sum(pi, pj, s2, n)
        counts = _pair_sum(pi, pj, np.ones(n), n)
    iso = np.hypot(jx, jy) < ISOTROPIC_TOL * counts
    theta_bar = np.where(iso, np.nan, wrap_line(0.5 * np.arctan2(jy, jx)))
    if not densities:
        return theta_bar, iso, None, None

    tb = np.where(iso, 0.0, theta_bar)
    if global_mode:
        plus = np.full(n, float(np.sum(np.cos(theta - tb[0]) >= 0)))
    else:
        # k counts for i if cos(theta_k - tb_i) >= 0 (every k when i is isotropic)
        on_i = ((np.cos(theta[pj] - tb[pi]) >= 0) | iso[pi]).astype(float)
        on_j = ((np.cos(theta[pi] - tb[pj]) >= 0) | iso[pj]).astype(float)
        self_plus = ((np.cos(theta - tb) >= 0) | iso).astype(float)
        plus = (self_plus + np.bincount(pi, weights=on_i, minlength=n)
                + np.bincount(pj, weights=on_j, minlength=n))
    area = params.neighborhood_area
    return theta_bar, iso, plus / area, (counts - plus) / area


def local_densities(state: ParticleState, params: SimParams, i: int) -> tuple[float, float]:
    """``(rho_plus_i, rho_minus_i)`` for one particle, by direct search."""
    if not 0 <= i < state.n:
        raise IndexError(f"particle index {i} out of range")
    L, R = params.box_length, params.radius
    if params.global_interaction:
        nb = np.arange(state.n)
    else:
        d = _min_image(state.positions - state.positions[i], L)
        nb = np.flatnonzero(np.einsum("ij,ij->i", d, d) <= R * R)
    tb = nematic_mean_angle(state.angles[nb])
    if tb is None:
        plus = nb.size
    else:
        plus = int(np.sum(np.cos(state.angles[nb] - tb) >= 0))
    area = params.neighborhood_area
    return plus / area, (nb.size - plus) / area


# ---------------------------------------------------------------- dynamics

def step(state: ParticleState, params: SimParams, rng: RandomStream,
         method: str = "auto") -> ParticleState:
    """One Euler-Maruyama step; all neighbor statistics use the pre-step state.

    Order: alignment drift + noise, then reversal flips, then transport with
    the new heading. Draws ``n`` normals, then ``n`` uniforms if reversals
    are on.
    """
    dt, nu, d = params.dt, params.nu, params.d_noise
    theta_bar, iso, rho_p, rho_m = local_means(state, params, method, params.reversals)
    theta = state.angles
    phi = theta - np.where(iso, 0.0, theta_bar)
    cphi, sphi = np.cos(phi), np.sin(phi)
    xi = rng.normal(state.n)

    # Sign(0) = 0; cos(pi/2) is ~6e-17 in floating point, so snap the boundary
    sgn = np.sign(np.where(np.abs(cphi) <= BOUNDARY_TOL, 0.0, cphi))
    drift = -nu * sgn * sphi - d * np.sin(2 * phi)
    amp = np.abs(cphi)
    drift = np.where(iso, 0.0, drift)
    amp = np.where(iso, 1.0, amp)
    new = theta + drift * dt + math.sqrt(2 * d * dt) * amp * xi

    if params.reversals:
        on_plus = cphi >= 0
        rate = params.reversal_rate(np.where(on_plus, rho_m, rho_p))
        flip = rng.uniform(state.n) < -np.expm1(-rate * dt)
        flip &= ~iso
        new = np.where(flip, new + math.pi, new)

    new = wrap_angle(new)
    L = params.box_length
    pos = state.positions + params.v0 * dt * np.column_stack([np.cos(new), np.sin(new)])
    pos = np.mod(pos, L)
    pos[pos >= L] = 0.0  # np.mod can round up to L for tiny negatives
    return ParticleState(pos, new, state.time + dt)


def simulate(state: ParticleState, params: SimParams, n_steps: int, rng: RandomStream,
             stride: int = 0, method: str = "auto", callback=None) -> ParticleState:
    """Advance ``n_steps``; ``callback(step_index, state)`` every ``stride`` steps."""
    for k in range(1, n_steps + 1):
        state = step(state, params, rng, method)
        if callback is not None and stride and k % stride == 0:
            callback(k, state)
    return state


def count_reversals(before: ParticleState, after: ParticleState, params: SimParams) -> np.ndarray:
    """Flags of particles whose heading jumped by more than a quarter turn."""
    jump = wrap_angle(after.angles - before.angles)
    return np.abs(jump) > math.pi / 2


# ---------------------------------------------------------------- initialization

def uniform_positions(n: int, L: float, rng: RandomStream) -> np.ndarray:
    pos = rng.uniform((n, 2)) * L
    pos[pos >= L] = 0.0
    return pos


def gvm_state(params: SimParams, fraction_plus: float, theta_bar: float, rng: RandomStream,
              kappa: float | None = None) -> ParticleState:
    """Uniform positions and angles from the GVM mixture at ``kappa`` (default ``nu/d``).

    The number of ``+`` particles is ``round(fraction_plus * n)``.
    """
    if not 0 <= fraction_plus <= 1:
        raise ValueError("fraction_plus must be in [0, 1]")
    kappa = params.kappa if kappa is None else kappa
    n_plus = int(round(fraction_plus * params.n))
    pos = uniform_positions(params.n, params.box_length, rng)
    g = GvmParams(kappa, theta_bar)
    parts = []
    if n_plus:
        parts.append(sample(g, "plus", n_plus, rng))
    if params.n - n_plus:
        parts.append(sample(g, "minus", params.n - n_plus, rng))
    return ParticleState(pos, np.concatenate(parts), 0.0)


# ---------------------------------------------------------------- coarse graining

@dataclass(frozen=True, eq=False)
class SlabFields:
    centers: np.ndarray
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    theta_bar: np.ndarray  # NaN where a slab is empty or isotropic
    counts: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        return self.rho_plus - self.rho_minus


def measure_fields(state: ParticleState, params: SimParams, n_bins: int,
                   reference_angle: float | None = None) -> SlabFields:
    """Coarse-grain into ``n_bins`` slabs along x1.

    Each slab uses its own nematic mean angle unless ``reference_angle`` is
    given, in which case ``+``/``-`` are counted against that common line.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    L = params.box_length
    slab = np.minimum((state.positions[:, 0] * (n_bins / L)).astype(np.int64), n_bins - 1)
    area = L * L / n_bins
    rp = np.zeros(n_bins)
    rm = np.zeros(n_bins)
    tb = np.full(n_bins, np.nan)
    counts = np.bincount(slab, minlength=n_bins)
    for b in range(n_bins):
        a = state.angles[slab == b]
        if a.size == 0:
            continue
        mean = nematic_mean_angle(a)
        if mean is not None:
            tb[b] = mean
        ref = reference_angle if reference_angle is not None else mean
        plus = a.size if ref is None else int(np.sum(np.cos(a - ref) >= 0))
        rp[b] = plus / area
        rm[b] = (a.size - plus) / area
    centers = (np.arange(n_bins) + 0.5) * (L / n_bins)
    return SlabFields(centers, rp, rm, tb, counts)


def with_seed(params: SimParams, seed: int) -> SimParams:
    return replace(params, seed=seed)
