"""Generalized von Mises (GVM) distribution on angles of lines.

``M(theta) = exp(-kappa / |cos(theta - theta0)|) / Z_kappa`` is normalized to
one on *each* half-circle ``cos(theta - theta0) > 0`` and ``< 0``. Averages
``<phi>_M = (2 / Z_kappa) int_0^{pi/2} phi(theta) exp(-kappa / cos theta)``
are the building blocks of every macroscopic coefficient.

Internally the weight is evaluated as ``exp(-kappa (1/cos - 1))`` so that
large concentrations do not underflow; the ``exp(-kappa)`` factor cancels in
every ratio and is restored only where an absolute value is requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .numerics import RandomStream, integrate_adaptive

HALF_PI = 0.5 * math.pi

# exp(-kappa/|cos|) is treated as exactly zero once kappa/|cos| exceeds this
EXP_GUARD = 700.0


def wrap_angle(theta):
    """Fold angles of vectors into [-pi, pi)."""
    return np.mod(np.asarray(theta, dtype=float) + math.pi, 2 * math.pi) - math.pi


def wrap_line(theta):
    """Fold angles of lines into [-pi/2, pi/2)."""
    return np.mod(np.asarray(theta, dtype=float) + HALF_PI, math.pi) - HALF_PI


@dataclass(frozen=True)
class GvmParams:
    kappa: float
    theta0: float = 0.0

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError(f"GvmParams: kappa must be > 0, got {self.kappa}")
        object.__setattr__(self, "theta0", float(wrap_line(self.theta0)))

    @property
    def noise(self) -> float:
        """Scaled angular diffusion ``D = 1 / kappa``."""
        return 1.0 / self.kappa


@dataclass(frozen=True)
class EquilibriumParams:
    rho_plus: float
    rho_minus: float
    theta_bar: float = 0.0

    def __post_init__(self):
        if self.rho_plus < 0 or self.rho_minus < 0:
            raise ValueError("EquilibriumParams: densities must be nonnegative")
        object.__setattr__(self, "theta_bar", float(wrap_line(self.theta_bar)))


def _check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not (kappa > 0 and math.isfinite(kappa)):
        raise ValueError(f"kappa must be > 0, got {kappa}")
    return kappa


def scaled_weight(kappa: float, cos_theta) -> np.ndarray:
    """``exp(-kappa (1/c - 1))`` for ``c = |cos theta| > 0``, zero in the guard band."""
    c = np.abs(np.asarray(cos_theta, dtype=float))
    out = np.zeros_like(c)
    live = c * EXP_GUARD > kappa
    out[live] = np.exp(-kappa * (1.0 / c[live] - 1.0))
    return out


@lru_cache(maxsize=256)
def scaled_partition(kappa: float) -> float:
    """``Z_kappa * exp(kappa)``."""
    kappa = _check_kappa(kappa)
    res = integrate_adaptive(lambda t: scaled_weight(kappa, np.cos(t)), (0.0, HALF_PI))
    return 2.0 * res.value


def partition_function(kappa: float) -> float:
    """``Z_kappa = int_{cos>0} exp(-kappa / cos theta) d theta``."""
    return scaled_partition(_check_kappa(kappa)) * math.exp(-kappa)


def density(params: GvmParams, theta) -> np.ndarray:
    """GVM density; exactly zero where ``cos(theta - theta0) = 0``."""
    w = scaled_weight(params.kappa, np.cos(np.asarray(theta, dtype=float) - params.theta0))
    return w / scaled_partition(params.kappa)


def moment(kappa: float, phi: Callable[[np.ndarray], np.ndarray], **quad_kw) -> float:
    """``<phi>_M`` over the half-circle [0, pi/2] with the one-sided convention.

    ``phi`` may carry inverse powers of ``cos``; it is only evaluated where the
    exponential weight is nonzero.
    """
    kappa = _check_kappa(kappa)
    return moment_integral(kappa, phi, **quad_kw).value * 2.0 / scaled_partition(kappa)


def moment_integral(kappa: float, phi, **quad_kw):
    """Unnormalized ``int_0^{pi/2} phi(theta) exp(-kappa (1/cos - 1))`` as a QuadResult."""

    def integrand(t):
        c = np.cos(t)
        w = scaled_weight(kappa, c)
        out = np.zeros_like(t)
        live = w > 0
        if np.any(live):
            out[live] = np.asarray(phi(t[live]), dtype=float) * w[live]
        return out

    return integrate_adaptive(integrand, (0.0, HALF_PI), **quad_kw)


def equilibrium_density(eq: EquilibriumParams, kappa: float, theta) -> np.ndarray:
    """``rho_+ chi^+ M + rho_- chi^- M`` centered on ``eq.theta_bar``."""
    theta = np.asarray(theta, dtype=float)
    m = density(GvmParams(kappa, eq.theta_bar), theta)
    plus = np.cos(theta - eq.theta_bar) > 0
    return np.where(plus, eq.rho_plus, eq.rho_minus) * m


def sample(params: GvmParams, side: str, n: int, rng: RandomStream) -> np.ndarray:
    """Draw ``n`` angles from M restricted to one half-circle.

    Rejection sampling against the uniform envelope on
    ``(theta0 - pi/2, theta0 + pi/2)``; ``side='minus'`` shifts by ``pi``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    kappa = params.kappa
    accept_rate = scaled_partition(kappa) / math.pi
    out = np.empty(n)
    filled = 0
    while filled < n:
        batch = int(1.2 * (n - filled) / accept_rate) + 16
        phi = (rng.uniform(batch) - 0.5) * math.pi
        u = rng.uniform(batch)
        keep = phi[u < scaled_weight(kappa, np.cos(phi))]
        # the envelope has an open boundary; drop exact edge draws
        keep = keep[np.abs(keep) < HALF_PI]
        take = min(keep.size, n - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    if side == "minus":
        out = out + math.pi
    return wrap_angle(out + params.theta0)
