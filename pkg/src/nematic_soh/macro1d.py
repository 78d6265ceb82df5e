"""One-dimensional finite-volume solver for the nematic SOH system.

Fields depend on ``x = x1`` only, on a periodic grid of ``n_cells`` cells:

    d_t rho_+ + d_x(d1 rho_+ cos th) =  S,
    d_t rho_- - d_x(d1 rho_- cos th) = -S,
    d_t th + (d2 delta / rho) cos th d_x th - (mu / rho) sin th d_x delta
         = (2 k D / rho) d_x(rho d_x th),

with ``rho = rho_+ + rho_-``, ``delta = rho_+ - rho_-``, ``th`` the mean line
angle, ``S = lambda(rho_+) rho_- - lambda(rho_-) rho_+`` and
``lambda(r) = lambda1 r^2 + lambda0``. Units are the dimensionless ones of the
hydrodynamic scaling (particle speed 1, alignment frequency 1).

Each step applies, in order, a hyperbolic update (Rusanov fluxes for
``rho_+-``, upwinded advection and centered pressure for ``th``), the
diffusion correction and the reversal reaction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .coefficients import CoefficientSet
from .gvm import wrap_line
from .hyperbolicity import wave_speeds

VACUUM = 1e-12
MAX_RETRIES = 5


class SolverError(RuntimeError):
    """The time step collapsed or the state became invalid."""


@dataclass(frozen=True, eq=False)
class MacroState:
    dx: float
    rho_plus: np.ndarray
    rho_minus: np.ndarray
    theta_bar: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        rp = np.asarray(self.rho_plus, dtype=float)
        rm = np.asarray(self.rho_minus, dtype=float)
        th = np.asarray(self.theta_bar, dtype=float)
        if rp.ndim != 1 or rp.shape != rm.shape or rp.shape != th.shape or rp.size < 3:
            raise ValueError("MacroState: fields must be 1-D arrays of equal length >= 3")
        if not self.dx > 0:
            raise ValueError(f"MacroState: dx must be > 0, got {self.dx}")
        if np.any(rp < 0) or np.any(rm < 0):
            raise ValueError("MacroState: densities must be >= 0")
        object.__setattr__(self, "rho_plus", rp)
        object.__setattr__(self, "rho_minus", rm)
        object.__setattr__(self, "theta_bar", wrap_line(th))

    @property
    def n_cells(self) -> int:
        return self.rho_plus.size

    @property
    def length(self) -> float:
        return self.n_cells * self.dx

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def rho(self) -> np.ndarray:
        return self.rho_plus + self.rho_minus

    @property
    def delta(self) -> np.ndarray:
        return self.rho_plus - self.rho_minus

    def mass(self) -> float:
        return float(math.fsum(self.rho) * self.dx)


@dataclass(frozen=True)
class SolverParams:
    coefficients: CoefficientSet
    k_nonlocal: float = 0.0
    lambda0: float = 0.0
    lambda1: float = 0.0
    cfl: float = 0.9
    t_end: float = 1.0
    boundary: str = "periodic"

    def __post_init__(self):
        if not 0 < self.cfl < 1:
            raise ValueError(f"SolverParams: cfl must be in (0, 1), got {self.cfl}")
        for name in ("k_nonlocal", "lambda0", "lambda1"):
            if getattr(self, name) < 0:
                raise ValueError(f"SolverParams: {name} must be >= 0")
        if not self.t_end >= 0:
            raise ValueError("SolverParams: t_end must be >= 0")
        if self.boundary != "periodic":
            raise ValueError(f"SolverParams: only periodic boundaries are supported, got {self.boundary!r}")

    @property
    def diffusivity(self) -> float:
        """``2 k D`` of the angle equation."""
        return 2.0 * self.k_nonlocal * max(self.coefficients.diffusion_D, 0.0)

    @property
    def reactive(self) -> bool:
        return self.lambda0 > 0 or self.lambda1 > 0


# ---------------------------------------------------------------- reversals

def reversal_source(rho_plus, rho_minus, lambda0: float, lambda1: float):
    """``(S_plus, S_minus)`` with ``S_plus = lambda(rho_+) rho_- - lambda(rho_-) rho_+``."""
    rp = np.asarray(rho_plus, dtype=float)
    rm = np.asarray(rho_minus, dtype=float)
    s = (lambda1 * rp * rp + lambda0) * rm - (lambda1 * rm * rm + lambda0) * rp
    return s, -s


def delta_rate(s, delta, lambda0: float, lambda1: float):
    """``d delta/dt = 2 S_plus`` written in ``(s, delta)``: ``2 delta (lambda1 (s^2 - delta^2)/4 - lambda0)``."""
    return 2.0 * delta * (lambda1 * (s * s - delta * delta) / 4.0 - lambda0)


@dataclass(frozen=True)
class FixedPoint:
    delta: float
    stable: bool


def local_reversal_fixed_points(s: float, lambda0: float, lambda1: float) -> tuple[FixedPoint, ...]:
    """Fixed points of the per-cell reversal dynamics at total density ``s``.

    Below ``s = 2 sqrt(lambda0/lambda1)`` only ``delta = 0`` (stable); above it
    ``delta = 0`` is unstable and ``+-sqrt(s^2 - 4 lambda0/lambda1)`` are stable.
    At the threshold the pair merges into ``0``.
    """
    if not s > 0:
        raise ValueError(f"total density must be > 0, got {s}")
    if lambda0 < 0 or lambda1 < 0:
        raise ValueError("reversal rates must be >= 0")
    if lambda1 == 0:
        return (FixedPoint(0.0, lambda0 > 0),)
    sq = s * s - 4.0 * lambda0 / lambda1
    if sq <= 0:
        return (FixedPoint(0.0, True),)
    root = min(math.sqrt(sq), s)
    return (FixedPoint(-root, True), FixedPoint(0.0, False), FixedPoint(root, True))


def reversal_threshold(lambda0: float, lambda1: float) -> float:
    return 2.0 * math.sqrt(lambda0 / lambda1) if lambda1 > 0 else math.inf


# ---------------------------------------------------------------- sub-steps

def fold_line_difference(d):
    """Fold angle-of-line differences into (-pi/2, pi/2]."""
    return math.pi / 2 - np.mod(math.pi / 2 - np.asarray(d, dtype=float), math.pi)


def _speeds(state: MacroState, cs: CoefficientSet) -> np.ndarray:
    return cs.d1 * wave_speeds(state.rho, state.delta, state.theta_bar, cs.d2_hat, cs.mu_hat)


def max_wave_speed(state: MacroState, cs: CoefficientSet) -> float:
    a = float(np.max(_speeds(state, cs)))
    return max(a, cs.d1 * float(np.max(np.abs(np.cos(state.theta_bar)))))


def hyperbolic_step(state: MacroState, params: SolverParams, dt: float) -> MacroState:
    cs = params.coefficients
    dx = state.dx
    rp, rm, th = state.rho_plus, state.rho_minus, state.theta_bar
    c = np.cos(th)
    a = cs.d1 * np.abs(c)
    a_face = np.maximum(a, np.roll(a, -1))  # face i+1/2

    def rusanov(u, flux):
        up, fp = np.roll(u, -1), np.roll(flux, -1)
        return 0.5 * (flux + fp) - 0.5 * a_face * (up - u)

    f_plus = rusanov(rp, cs.d1 * rp * c)
    f_minus = rusanov(rm, -cs.d1 * rm * c)
    new_rp = rp - dt / dx * (f_plus - np.roll(f_plus, 1))
    new_rm = rm - dt / dx * (f_minus - np.roll(f_minus, 1))

    rho = rp + rm
    delta = rp - rm
    live = rho >= VACUUM
    safe = np.where(live, rho, 1.0)
    adv = cs.d2 * delta / safe * c
    back = fold_line_difference(th - np.roll(th, 1)) / dx
    fwd = fold_line_difference(np.roll(th, -1) - th) / dx
    grad_th = np.where(adv > 0, back, fwd)
    grad_delta = (np.roll(delta, -1) - np.roll(delta, 1)) / (2 * dx)
    rhs = -adv * grad_th + cs.mu / safe * np.sin(th) * grad_delta
    new_th = np.where(live, th + dt * rhs, th)
    scale = float(np.max(rho)) if rho.size else 0.0
    return MacroState(dx, _clean(new_rp, scale), _clean(new_rm, scale), new_th, state.time + dt)


def _clean(u: np.ndarray, scale: float) -> np.ndarray:
    """Flush roundoff-level negatives to zero; real violations are left for
    :class:`MacroState` to reject."""
    return np.where((u < 0) & (u > -1e-13 * scale), 0.0, u)


def diffusion_step(state: MacroState, params: SolverParams, dt: float) -> MacroState:
    """Explicit conservative update of ``th += dt (2kD/rho) d_x(rho d_x th)``."""
    nu = params.diffusivity
    if nu == 0:
        return state
    th, rho, dx = state.theta_bar, state.rho, state.dx
    rho_face = 0.5 * (rho + np.roll(rho, -1))
    flux = rho_face * fold_line_difference(np.roll(th, -1) - th) / dx
    live = rho >= VACUUM
    safe = np.where(live, rho, 1.0)
    new_th = np.where(live, th + dt * nu / safe * (flux - np.roll(flux, 1)) / dx, th)
    return replace(state, theta_bar=wrap_line(new_th))


def reaction_step(state: MacroState, params: SolverParams, dt: float) -> MacroState:
    """Heun integration of ``d delta/dt = 2 S_plus`` at fixed per-cell ``rho``."""
    if not params.reactive:
        return state
    l0, l1 = params.lambda0, params.lambda1
    s = state.rho
    d0 = state.delta
    k1 = delta_rate(s, d0, l0, l1)
    k2 = delta_rate(s, d0 + dt * k1, l0, l1)
    d = np.clip(d0 + 0.5 * dt * (k1 + k2), -s, s)
    rp = 0.5 * (s + d)
    return replace(state, rho_plus=rp, rho_minus=s - rp)


# ---------------------------------------------------------------- driver

def stable_dt(state: MacroState, params: SolverParams) -> float:
    """Tightest of the CFL, diffusion and reaction step bounds."""
    dx = state.dx
    speed = max_wave_speed(state, params.coefficients)
    if not math.isfinite(speed):
        raise SolverError(f"wave speed is not finite at t={state.time}")
    dt = params.cfl * dx / speed if speed > 0 else math.inf
    nu = params.diffusivity
    if nu > 0:
        rho = state.rho
        live = rho >= VACUUM
        if np.any(live):
            ratio = float(np.max(rho[live]) / np.min(rho[live]))
            dt = min(dt, dx * dx / (4.0 * nu * ratio))
    if params.reactive:
        smax = float(np.max(state.rho))
        rate = 2.0 * (0.75 * params.lambda1 * smax * smax + params.lambda0)
        if rate > 0:
            dt = min(dt, 0.5 / rate)
    return dt


def full_step(state: MacroState, params: SolverParams, dt: float) -> MacroState:
    new = hyperbolic_step(state, params, dt)
    new = diffusion_step(new, params, dt)
    return reaction_step(new, params, dt)


@dataclass
class RunResult:
    snapshots: list[MacroState]
    mass_log: list[tuple[float, float]]
    n_steps: int
    retries: int

    @property
    def final(self) -> MacroState:
        return self.snapshots[-1]


def run(initial: MacroState, params: SolverParams, stride: int = 0,
        max_steps: int | None = None, dt: float | None = None) -> RunResult:
    """Integrate to ``params.t_end`` (or for ``max_steps`` steps).

    ``dt`` fixes the step (still capped by the stability bound). A step that
    produces negative densities is retried with half the step, at most five
    times. Snapshots are taken every ``stride`` steps plus the initial and
    final states.
    """
    state = initial
    snaps = [state]
    log = [(state.time, state.mass())]
    steps = retries = 0
    while state.time < params.t_end * (1 - 1e-14) and (max_steps is None or steps < max_steps):
        h = stable_dt(state, params)
        if dt is not None:
            h = min(h, dt)
        if max_steps is None:
            h = min(h, params.t_end - state.time)
        if not h > 1e-14 * max(1.0, params.t_end):
            raise SolverError(f"time step collapsed to {h} at t={state.time}")
        for attempt in range(MAX_RETRIES + 1):
            try:
                new = full_step(state, params, h)
            except ValueError:
                new = None
            if new is not None:
                break
            if attempt == MAX_RETRIES:
                raise SolverError(
                    f"negative density persists after {MAX_RETRIES} step halvings at t={state.time}")
            h *= 0.5
            retries += 1
        if not (np.all(np.isfinite(new.rho)) and np.all(np.isfinite(new.theta_bar))):
            raise SolverError(f"non-finite state at t={new.time}")
        state = new
        steps += 1
        if stride and steps % stride == 0:
            snaps.append(state)
            log.append((state.time, state.mass()))
    if snaps[-1] is not state:
        snaps.append(state)
        log.append((state.time, state.mass()))
    return RunResult(snaps, log, steps, retries)


# ---------------------------------------------------------------- initial data

def _grid(n_cells: int, length: float) -> tuple[np.ndarray, float]:
    if n_cells < 3 or not length > 0:
        raise ValueError("need n_cells >= 3 and length > 0")
    dx = length / n_cells
    return (np.arange(n_cells) + 0.5) * dx, dx


def uniform_state(n_cells: int, length: float, rho_plus: float, rho_minus: float,
                  theta: float = 0.0) -> MacroState:
    x, dx = _grid(n_cells, length)
    one = np.ones_like(x)
    return MacroState(dx, rho_plus * one, rho_minus * one, theta * one)


def riemann_state(n_cells: int, length: float, left: tuple[float, float, float],
                  right: tuple[float, float, float], x0: float | None = None) -> MacroState:
    """Piecewise constant ``(rho_+, rho_-, th)``: ``left`` on ``[0, x0)``, ``right`` after."""
    x, dx = _grid(n_cells, length)
    x0 = 0.5 * length if x0 is None else x0
    on_left = x < x0
    fields = [np.where(on_left, lv, rv) for lv, rv in zip(left, right)]
    return MacroState(dx, *fields)


def sine_state(n_cells: int, length: float, rho_plus: float, rho_minus: float,
               theta0: float = 0.0, amplitude: float = 0.01, mode: int = 1,
               field: str = "theta") -> MacroState:
    """Uniform state with a sine perturbation on ``theta``, ``rho_plus`` or ``rho_minus``."""
    x, dx = _grid(n_cells, length)
    # cell averages of sin, so refinement studies compare like with like
    k = 2 * math.pi * mode / length
    wave = (np.cos(k * (x - dx / 2)) - np.cos(k * (x + dx / 2))) / (k * dx)
    rp = np.full_like(x, rho_plus)
    rm = np.full_like(x, rho_minus)
    th = np.full_like(x, theta0)
    if field == "theta":
        th = th + amplitude * wave
    elif field == "rho_plus":
        rp = rp + amplitude * wave
    elif field == "rho_minus":
        rm = rm + amplitude * wave
    else:
        raise ValueError(f"unknown field {field!r}")
    return MacroState(dx, rp, rm, th)


def bands_state(n_cells: int, length: float, background: float = 0.5, peak: float = 1.0,
                width: float | None = None, theta0: float = 0.0) -> MacroState:
    """Counter-propagating Gaussian bands: ``rho_+`` peaked at L/4, ``rho_-`` at 3L/4."""
    x, dx = _grid(n_cells, length)
    width = 0.05 * length if width is None else width

    def bump(center):
        d = x - center
        d = d - length * np.round(d / length)
        return np.exp(-0.5 * (d / width) ** 2)

    rp = background + peak * bump(0.25 * length)
    rm = background + peak * bump(0.75 * length)
    return MacroState(dx, rp, rm, np.full_like(x, theta0))


PRESETS = {
    "uniform": uniform_state,
    "riemann": riemann_state,
    "sine": sine_state,
    "bands": bands_state,
}
