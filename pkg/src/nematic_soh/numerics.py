"""Low-level numerical kernels shared by the rest of the package.

Adaptive Gauss-Kronrod quadrature, cumulative integration on sample grids,
a robust real cubic root solver and a seeded random stream.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Interval",
    "QuadResult",
    "QuadratureError",
    "integrate_adaptive",
    "cumulative_integral",
    "cubic_roots",
    "solve_cubic_real",
    "RandomStream",
    "rng_stream",
]

DEFAULT_REL_TOL = 1e-10
DEFAULT_ABS_TOL = 1e-14

# 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15 table).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Nodes on [-1, 1] in ascending order with matching weights; the Gauss
# weights sit on every other Kronrod node.
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(15)
_GW[1:7:2] = _WG[:3]
_GW[7] = _WG[3]
_GW[9:15:2] = _WG[2::-1]


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"interval endpoints must be finite, got ({self.a}, {self.b})")
        if not self.a < self.b:
            raise ValueError(f"interval requires a < b, got ({self.a}, {self.b})")


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int


class QuadratureError(RuntimeError):
    """Adaptive quadrature ran out of its subdivision budget."""

    def __init__(self, message: str, best: QuadResult):
        super().__init__(message)
        self.best = best


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    y = np.asarray(f(mid + half * _NODES), dtype=float)
    if y.shape != (15,):
        y = np.broadcast_to(y, (15,))
    k = half * float(_KW @ y)
    g = half * float(_GW @ y)
    return k, abs(k - g)


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    iv: Interval | tuple[float, float],
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    max_subdivisions: int = 4000,
) -> QuadResult:
    """Globally adaptive Gauss-Kronrod (7/15) quadrature of ``f`` over ``iv``.

    ``f`` is called with a numpy array of 15 abscissae and must return the
    matching array of values. Endpoints are never evaluated, so integrands
    whose formula is singular exactly at an endpoint are fine as long as the
    integral exists.

    The interval with the largest error estimate is bisected until the summed
    estimate drops below ``max(abs_tol, rel_tol * |value|)``. Exhausting the
    budget raises :class:`QuadratureError` carrying the best estimate.
    """
    if not isinstance(iv, Interval):
        iv = Interval(*iv)
    value, err = _gk15(f, iv.a, iv.b)
    evals = 15
    heap = [(-err, iv.a, iv.b, value)]
    total, total_err = value, err
    n_sub = 0
    while total_err > max(abs_tol, rel_tol * abs(total)):
        if n_sub >= max_subdivisions:
            raise QuadratureError(
                f"no convergence after {n_sub} subdivisions "
                f"(estimate {total!r}, error {total_err:.3e})",
                QuadResult(total, total_err, evals),
            )
        neg_err, a, b, v = heapq.heappop(heap)
        m = 0.5 * (a + b)
        if not a < m < b:
            # interval cannot be split further in floating point
            heapq.heappush(heap, (neg_err, a, b, v))
            raise QuadratureError(
                "interval collapsed below floating-point resolution",
                QuadResult(total, total_err, evals),
            )
        v1, e1 = _gk15(f, a, m)
        v2, e2 = _gk15(f, m, b)
        evals += 30
        n_sub += 1
        heapq.heappush(heap, (-e1, a, m, v1))
        heapq.heappush(heap, (-e2, m, b, v2))
        # resum to avoid drift from repeated incremental updates
        if n_sub % 64 == 0:
            total = math.fsum(item[3] for item in heap)
            total_err = math.fsum(-item[0] for item in heap)
        else:
            total += v1 + v2 - v
            total_err += e1 + e2 + neg_err
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    return QuadResult(total, total_err, evals)


def _cubic_panel_weights(p: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Weights integrating the Lagrange cubic through abscissae ``p`` (shape
    (m, 4), shifted so the panel starts at 0) over ``[0, h]``."""
    w = np.empty_like(p)
    for j in range(4):
        others = [p[:, m] for m in range(4) if m != j]
        s1 = others[0] + others[1] + others[2]
        s2 = others[0] * others[1] + others[0] * others[2] + others[1] * others[2]
        s3 = others[0] * others[1] * others[2]
        num = h**4 / 4 - s1 * h**3 / 3 + s2 * h**2 / 2 - s3 * h
        den = (p[:, j] - others[0]) * (p[:, j] - others[1]) * (p[:, j] - others[2])
        w[:, j] = num / den
    return w


def cumulative_integral(x: Sequence[float], y: Sequence[float], order: int = 2) -> np.ndarray:
    """Running integral ``F(x_i) = int_{x_0}^{x_i} y`` of sampled data.

    ``order=2`` is the composite trapezoid rule. ``order=4`` integrates, on
    each panel, the cubic interpolating the four nearest samples (falls back
    to trapezoid when fewer than four samples are given).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if order not in (2, 4):
        raise ValueError(f"unsupported order {order}")
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-D arrays of equal length")
    if x.size < 2:
        raise ValueError("need at least two samples")
    h = np.diff(x)
    if not np.all(h > 0):
        raise ValueError("abscissae must be strictly increasing")
    if order == 2 or x.size < 4:
        panels = 0.5 * h * (y[1:] + y[:-1])
    else:
        n = x.size
        start = np.clip(np.arange(n - 1) - 1, 0, n - 4)
        idx = start[:, None] + np.arange(4)[None, :]
        p = x[idx] - x[:-1, None]
        w = _cubic_panel_weights(p, h)
        panels = np.sum(w * y[idx], axis=1)
    out = np.empty_like(x)
    out[0] = 0.0
    np.cumsum(panels, out=out[1:])
    return out


def cubic_roots(a3: float, a2: float, a1: float, a0: float) -> list[complex]:
    """All three roots of ``a3 z^3 + a2 z^2 + a1 z + a0``.

    Real roots come back as real-valued complex numbers, sorted ascending,
    followed by any complex-conjugate pair. Uses the trigonometric form when
    the discriminant is positive and Cardano's formula otherwise.
    """
    if a3 == 0:
        raise ValueError("leading coefficient must be nonzero")
    b, c, d = a2 / a3, a1 / a3, a0 / a3
    shift = b / 3.0
    p = c - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * c / 3.0 + d
    scale = max(1.0, abs(b), abs(c) ** 0.5, abs(d) ** (1.0 / 3.0))
    if abs(p) <= 1e-12 * scale**2 and abs(q) <= 1e-12 * scale**3:
        r = -shift
        return [complex(r), complex(r), complex(r)]
    disc = -(4.0 * p**3 + 27.0 * q * q)
    if disc > 0 or (p < 0 and abs(disc) <= 1e-14 * (4 * abs(p) ** 3 + 27 * q * q)):
        # three real roots (the second branch catches a double root)
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        arg = min(1.0, max(-1.0, arg))
        phi = math.acos(arg) / 3.0
        roots = [m * math.cos(phi - 2.0 * math.pi * k / 3.0) - shift for k in range(3)]
        roots = [_polish(a3, a2, a1, a0, r) for r in roots]
        return [complex(r) for r in sorted(roots)]
    # one real root; Cardano with the numerically stable branch
    sq = math.sqrt(q * q / 4.0 + p**3 / 27.0)
    u = -q / 2.0 - math.copysign(sq, q)
    u = math.copysign(abs(u) ** (1.0 / 3.0), u)
    t = u - p / (3.0 * u) if u != 0 else 0.0
    r = _polish(a3, a2, a1, a0, t - shift)
    # deflate: z^2 + e z + f = (z^3 + b z^2 + c z + d) / (z - r)
    e = b + r
    f = c + e * r
    half = -0.5 * e
    im = math.sqrt(max(0.0, f - half * half))
    return [complex(r), complex(half, -im), complex(half, im)]


def _polish(a3, a2, a1, a0, r: float, iters: int = 3) -> float:
    for _ in range(iters):
        pv = ((a3 * r + a2) * r + a1) * r + a0
        dp = (3 * a3 * r + 2 * a2) * r + a1
        if dp == 0 or pv == 0:
            break
        step = pv / dp
        # polishing only removes roundoff; a large step near a double root
        # would jump to a neighbouring root
        if abs(step) > 1e-8 * max(1.0, abs(r)):
            break
        nr = r - step
        npv = ((a3 * nr + a2) * nr + a1) * nr + a0
        if abs(npv) >= abs(pv):
            break
        r = nr
    return r


def solve_cubic_real(a3: float, a2: float, a1: float, a0: float) -> list[float]:
    """Real roots of the cubic, nondecreasing, repeated by multiplicity.

    Returns either one root or three (e.g. ``z**3`` gives ``[0, 0, 0]``).
    """
    roots = cubic_roots(a3, a2, a1, a0)
    if roots[1].imag != 0.0:
        return [roots[0].real]
    return [z.real for z in roots]


class RandomStream:
    """Seeded stream of uniform and standard-normal variates.

    Backed by numpy's PCG64 bit generator, so a given seed reproduces the
    same sequence on any build using the same numpy major version.
    """

    algorithm = "PCG64"

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, size=None) -> np.ndarray | float:
        return self._gen.random(size)

    def normal(self, size=None) -> np.ndarray | float:
        return self._gen.standard_normal(size)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen


def rng_stream(seed: int) -> RandomStream:
    return RandomStream(seed)
