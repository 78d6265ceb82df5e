"""Generalized collision invariant ``g`` for the nematic alignment operator.

On [0, pi/2] the invariant is

    g(theta) = - int_0^theta I(beta) / (cos^2 beta exp(-kappa/cos beta)) d beta,
    I(beta)  = int_beta^{pi/2} sin(2 alpha) exp(-kappa/cos alpha) d alpha,

and it is extended to the circle by ``g(-theta) = -g(theta)`` and
``g(pi - theta) = -g(theta)``.

The substitution ``u = 1/cos(alpha)`` turns the inner integral into
``I(beta) = 2 cos^2(beta) E_3(kappa / cos beta)`` with ``E_3`` the generalized
exponential integral, so the outer integrand is the bounded, smooth function
``2 exp(x) E_3(x)`` at ``x = kappa / cos beta``. It tends to ``2 cos(beta)/kappa``
near ``pi/2``, which removes the 0/0 form of the raw ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline
from scipy.special import expn

from .gvm import HALF_PI, scaled_partition, scaled_weight, wrap_angle
from .numerics import integrate_adaptive

DEFAULT_GRID = 4001
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)

# switch from scipy's expn to the asymptotic series above this argument
_ASYMPTOTIC_X = 500.0


def scaled_e3(x) -> np.ndarray:
    """``exp(x) * E_3(x)`` for ``x >= 0``, finite for arbitrarily large ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x <= _ASYMPTOTIC_X
    xs = x[small]
    out[small] = np.exp(xs) * expn(3, xs)
    xl = x[~small]
    if xl.size:
        # exp(x) E_n(x) ~ (1/x) sum_k (-1)^k (n)_k / x^k
        inv = np.where(np.isinf(xl), 0.0, 1.0 / np.where(np.isinf(xl), 1.0, xl))
        term = np.ones_like(xl)
        total = np.ones_like(xl)
        for k in range(12):
            term = -term * (3 + k) * inv
            total += term
        out[~small] = total * inv
    return out


def gci_slope(kappa: float, theta) -> np.ndarray:
    """``g'(theta)`` on [0, pi/2]; equals ``-2 exp(x) E_3(x)``, ``x = kappa/cos theta``."""
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta)
    with np.errstate(divide="ignore"):
        x = np.where(c > 0, kappa / np.maximum(c, 0.0), np.inf)
    return -2.0 * scaled_e3(x)


@dataclass(frozen=True, eq=False)
class GciTable:
    kappa: float
    grid: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    _spline: CubicHermiteSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size < 3 or not np.all(np.diff(grid) > 0):
            raise ValueError("GciTable: grid must be strictly increasing with >= 3 points")
        if grid[0] != 0.0 or not math.isclose(grid[-1], HALF_PI, rel_tol=0, abs_tol=1e-15):
            raise ValueError("GciTable: grid must span [0, pi/2]")
        if self.values[0] != 0.0:
            raise ValueError("GciTable: g(0) must be 0")
        if np.any(np.diff(self.values) > 0) or np.any(self.values > 0):
            raise ValueError("GciTable: values must be nonpositive and nonincreasing")
        object.__setattr__(self, "_spline", CubicHermiteSpline(grid, self.values, self.slopes))

    @property
    def n_grid(self) -> int:
        return int(self.grid.size)

    def interpolate(self, theta) -> np.ndarray:
        """Raw table interpolant on [0, pi/2] (no symmetry folding)."""
        return self._spline(theta)


def build_gci_table(kappa: float, n_grid: int = DEFAULT_GRID) -> GciTable:
    """Tabulate ``g`` on a uniform grid of ``n_grid`` points over [0, pi/2].

    Each grid panel integrates ``g'`` with 10-point Gauss-Legendre; the panel
    sums are accumulated from ``g(0) = 0``.
    """
    kappa = float(kappa)
    if not kappa > 0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    if n_grid < 3:
        raise ValueError("n_grid must be >= 3")
    grid = np.linspace(0.0, HALF_PI, n_grid)
    grid[-1] = HALF_PI
    half = 0.5 * np.diff(grid)
    mid = 0.5 * (grid[1:] + grid[:-1])
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    panels = half * (gci_slope(kappa, nodes) @ _GL_WEIGHTS)
    values = np.concatenate([[0.0], np.cumsum(panels)])
    slopes = gci_slope(kappa, grid)
    return GciTable(kappa, grid, values, slopes)


def gci_eval(table: GciTable, theta) -> np.ndarray:
    """Evaluate ``g`` anywhere on the circle using the table and its symmetries."""
    theta = np.asarray(theta, dtype=float)
    t = wrap_angle(theta)
    sign = np.where(t < 0, -1.0, 1.0)
    t = np.abs(t)
    upper = t > HALF_PI
    sign = np.where(upper, -sign, sign)
    t = np.where(upper, math.pi - t, t)
    t = np.clip(t, 0.0, HALF_PI)
    out = sign * table.interpolate(t)
    return out if out.ndim else float(out)


def ode_residual(table: GciTable, exclude_fraction: float = 0.02) -> float:
    """Max relative residual of ``(cos^2 e g')' = sin(2 theta) e``, ``e = exp(-kappa/cos)``.

    Second-order centered differences on the tabulated values, skipping the
    last ``exclude_fraction`` of the grid; normalized by ``max |sin(2 theta) e|``.
    Both sides carry the common factor ``exp(kappa)`` which cancels.
    """
    x, g, kappa = table.grid, table.values, table.kappa
    xm = 0.5 * (x[1:] + x[:-1])
    flux = np.cos(xm) ** 2 * scaled_weight(kappa, np.cos(xm)) * np.diff(g) / np.diff(x)
    lhs = np.diff(flux) / (xm[1:] - xm[:-1])
    xi = x[1:-1]
    rhs = np.sin(2 * xi) * scaled_weight(kappa, np.cos(xi))
    keep = xi <= x[-1] - exclude_fraction * (x[-1] - x[0])
    norm = np.max(np.abs(rhs))
    return float(np.max(np.abs(lhs - rhs)[keep]) / norm)


def cancellation_integrals(table: GciTable, theta0: float = 0.0) -> tuple[float, float]:
    """``(int_{cos>0} g M, int_{cos<0} g M)`` for the ``theta0``-shifted invariant."""
    kappa = table.kappa
    zs = scaled_partition(kappa)

    def integrand(t):
        return gci_eval(table, t - theta0) * scaled_weight(kappa, np.cos(t - theta0)) / zs

    plus = integrate_adaptive(integrand, (theta0 - HALF_PI, theta0 + HALF_PI)).value
    minus = integrate_adaptive(integrand, (theta0 + HALF_PI, theta0 + 3 * HALF_PI)).value
    return plus, minus
