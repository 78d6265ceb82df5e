"""Flux matrices and hyperbolicity certificate of the (rho, delta, theta_bar) system.

With time rescaled by ``d1`` the quasilinear system reads
``dU/dt + A(U) dU/dx1 + B(U) dU/dx2 = 0`` for ``U = (rho, delta, theta_bar)``,
where ``B(rho, delta, theta) = A(rho, delta, theta - pi/2)``.  Writing
``X = (delta/rho)^2`` and ``c = cos^2(theta_bar)``, the discriminant of the
characteristic cubic of ``A`` is a quadratic in ``X``:

    Delta(X) = alpha(c) X^2 + beta(c) X + gamma(c).

The system is hyperbolic wherever ``Delta >= 0`` (three real eigenvalues).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientSet
from .numerics import cubic_roots


@dataclass(frozen=True)
class MacroPoint:
    rho: float
    delta: float
    theta_bar: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"MacroPoint: rho must be > 0, got {self.rho}")
        if abs(self.delta) > self.rho * (1 + 1e-12):
            raise ValueError(f"MacroPoint: |delta| = {abs(self.delta)} exceeds rho = {self.rho}")

    @property
    def X(self) -> float:
        return (self.delta / self.rho) ** 2

    @property
    def c(self) -> float:
        return math.cos(self.theta_bar) ** 2

    @classmethod
    def from_cX(cls, c: float, X: float, rho: float = 1.0) -> "MacroPoint":
        """A point with ``cos^2(theta_bar) = c`` and ``(delta/rho)^2 = X``."""
        return cls(rho, rho * math.sqrt(X), math.acos(math.sqrt(min(max(c, 0.0), 1.0))))


def flux_matrix_A(point: MacroPoint, d2_hat: float, mu_hat: float) -> np.ndarray:
    """Jacobian of the x1-fluxes in the ``t -> d1 t`` time scale."""
    rho, delta = point.rho, point.delta
    c, s = math.cos(point.theta_bar), math.sin(point.theta_bar)
    return np.array([
        [0.0, c, -delta * s],
        [c, 0.0, -rho * s],
        [0.0, -mu_hat / rho * s, d2_hat * delta / rho * c],
    ])


def flux_matrix_B(point: MacroPoint, d2_hat: float, mu_hat: float) -> np.ndarray:
    """Jacobian of the x2-fluxes; the A matrix rotated by a quarter turn."""
    c, s = math.cos(point.theta_bar), math.sin(point.theta_bar)
    rho, delta = point.rho, point.delta
    return np.array([
        [0.0, s, delta * c],
        [s, 0.0, rho * c],
        [0.0, mu_hat / rho * c, d2_hat * delta / rho * s],
    ])


def characteristic_polynomial(point: MacroPoint, d2_hat: float, mu_hat: float) -> tuple[float, ...]:
    """Coefficients ``(a3, a2, a1, a0)`` of ``det(z I - A)``.

    ``z^3 - r cos d2 z^2 - (mu sin^2 + cos^2) z + r cos (d2 cos^2 - mu sin^2)``
    with ``r = delta/rho``.
    """
    r = point.delta / point.rho
    c, s = math.cos(point.theta_bar), math.sin(point.theta_bar)
    return (
        1.0,
        -r * c * d2_hat,
        -(mu_hat * s * s + c * c),
        r * c * (d2_hat * c * c - mu_hat * s * s),
    )


def cubic_discriminant(a3: float, a2: float, a1: float, a0: float) -> float:
    return (-27 * a3**2 * a0**2 + 18 * a3 * a2 * a1 * a0 + a2**2 * a1**2
            - 4 * a2**3 * a0 - 4 * a1**3 * a3)


def discriminant_coefficients(c, d2_hat: float, mu_hat: float):
    """``(alpha(c), beta(c), gamma(c))``; ``c`` may be an array."""
    d, m = d2_hat, mu_hat
    c = np.asarray(c, dtype=float)
    alpha = 4 * d**3 * c**2 * (c * (d + m) - m)
    beta = c * (
        (d * d * m * m - 18 * d * m * m - 27 * m * m - 36 * d * m - 8 * d * d - 20 * d * d * m) * c * c
        + 2 * m * (-d * d * m + 18 * d + 10 * d * d + 27 * m + 18 * m * d) * c
        - m * m * (18 * d - d * d + 27)
    )
    gamma = 4 * (c * (1 - m) + m) ** 3
    return alpha, beta, gamma


def characteristic_discriminant(c, X, d2_hat: float, mu_hat: float):
    """``Delta = alpha X^2 + beta X + gamma`` (broadcasts over ``c`` and ``X``)."""
    alpha, beta, gamma = discriminant_coefficients(c, d2_hat, mu_hat)
    X = np.asarray(X, dtype=float)
    out = alpha * X * X + beta * X + gamma
    return out if np.ndim(out) else float(out)


def no_real_root_threshold(d2_hat: float, mu_hat: float) -> float:
    """Sufficient bound: above this ``c`` the quadratic ``Delta(X)`` has no real roots.

    It exceeds 1 whenever ``mu_hat <= 1`` (the gap to 1 is proportional to
    ``d2_hat (1 - mu_hat)``), so on ``[0, 1]`` it is never active; use
    :func:`root_free_band` for the actual set.
    """
    return 9 * (mu_hat + d2_hat) / (9 * mu_hat + mu_hat * d2_hat + 8 * d2_hat)


def root_free_band(d2_hat: float, mu_hat: float, n: int = 100001) -> np.ndarray:
    """Grid values of ``c`` in [0, 1] where ``beta^2 - 4 alpha gamma < 0``."""
    c = np.linspace(0.0, 1.0, n)
    alpha, beta, gamma = discriminant_coefficients(c, d2_hat, mu_hat)
    return c[beta * beta - 4 * alpha * gamma < 0]


def eigenvalues(point: MacroPoint, d2_hat: float, mu_hat: float) -> list[complex]:
    return cubic_roots(*characteristic_polynomial(point, d2_hat, mu_hat))


@dataclass(frozen=True)
class EigenSample:
    c: float
    X: float
    discriminant: float
    real_parts: tuple[float, float, float]
    max_imag: float


@dataclass(frozen=True)
class HyperbolicityReport:
    kappa: float
    d2_hat: float
    mu_hat: float
    n_c: int
    n_X: int
    min_discriminant: float
    argmin: tuple[float, float]
    rows: tuple[dict, ...] = field(repr=False)
    eigen_samples: tuple[EigenSample, ...] = field(repr=False)

    def hyperbolic(self, tol: float = 1e-10) -> bool:
        return self.min_discriminant >= -tol

    def max_imag_where_positive(self, threshold: float = 1e-8) -> float:
        vals = [e.max_imag for e in self.eigen_samples if e.discriminant > threshold]
        return max(vals, default=0.0)


def hyperbolicity_scan(coeffs: CoefficientSet, n_c: int = 201, n_X: int = 201,
                       n_samples: int = 21) -> HyperbolicityReport:
    """Evaluate ``Delta`` on the closed grid ``[0,1]^2`` and sample eigenvalues.

    ``n_samples`` points per axis (a subgrid, boundaries included) are turned
    back into MacroPoints with ``rho = 1`` and the roots of the characteristic
    cubic are recorded.
    """
    if n_c < 2 or n_X < 2:
        raise ValueError("grid needs at least 2 points per axis")
    coeffs.check()
    d, m = coeffs.d2_hat, coeffs.mu_hat
    cs = np.linspace(0.0, 1.0, n_c)
    xs = np.linspace(0.0, 1.0, n_X)
    delta = characteristic_discriminant(cs[:, None], xs[None, :], d, m)
    rows = []
    for i, c in enumerate(cs):
        j = int(np.argmin(delta[i]))
        rows.append({"c": float(c), "min_discriminant": float(delta[i, j]), "argmin_X": float(xs[j])})
    flat = int(np.argmin(delta))
    i, j = divmod(flat, n_X)

    samples = []
    for c in np.linspace(0.0, 1.0, n_samples):
        for X in np.linspace(0.0, 1.0, n_samples):
            pt = MacroPoint.from_cX(float(c), float(X))
            roots = eigenvalues(pt, d, m)
            samples.append(EigenSample(
                float(c), float(X), float(characteristic_discriminant(c, X, d, m)),
                tuple(z.real for z in roots), max(abs(z.imag) for z in roots)))
    return HyperbolicityReport(
        kappa=coeffs.kappa, d2_hat=d, mu_hat=m, n_c=n_c, n_X=n_X,
        min_discriminant=float(delta[i, j]), argmin=(float(cs[i]), float(xs[j])),
        rows=tuple(rows), eigen_samples=tuple(samples))


def wave_speeds(rho, delta, theta_bar, d2_hat: float, mu_hat: float) -> np.ndarray:
    """Per-cell spectral radius of ``A`` (in the ``d1``-rescaled time).

    Vectorized over cells with a batched 3x3 eigensolve; cells with
    ``rho <= 0`` get speed ``|cos theta_bar|``.
    """
    rho = np.asarray(rho, dtype=float)
    delta = np.asarray(delta, dtype=float)
    theta_bar = np.asarray(theta_bar, dtype=float)
    c, s = np.cos(theta_bar), np.sin(theta_bar)
    live = rho > 0
    safe = np.where(live, rho, 1.0)
    r = np.where(live, delta / safe, 0.0)
    mats = np.zeros(rho.shape + (3, 3))
    mats[..., 0, 1] = c
    # similar to A after rescaling the third unknown by rho
    mats[..., 0, 2] = -r * s
    mats[..., 1, 0] = c
    mats[..., 1, 2] = -s
    mats[..., 2, 1] = -mu_hat * s
    mats[..., 2, 2] = d2_hat * r * c
    speed = np.max(np.abs(np.linalg.eigvals(mats)), axis=-1)
    return np.where(live, speed, np.abs(c))
