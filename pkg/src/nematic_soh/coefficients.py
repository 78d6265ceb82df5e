"""Macroscopic coefficients of the nematic SOH system.

    d1 = <cos>,  d2 = <g sin/cos> / <g sin/cos^2>,  mu = <g sin> / (kappa <g sin/cos^2>),
    d3 = 2 <g sin^3/cos^3> / <g sin/cos^2>,         D = d2 + d3 - mu - 2/kappa,

plus the non-locality constant ``k = r^2 / 8``. ``Z_kappa`` cancels in every
ratio, so the integrals below are left unnormalized.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .gci import GciTable, build_gci_table, gci_eval
from .gvm import moment_integral, scaled_weight
from .numerics import integrate_adaptive

POSITIVITY_SLACK = 1e-8


@dataclass(frozen=True)
class CoefficientSet:
    kappa: float
    d1: float
    d2: float
    mu: float
    d3: float
    diffusion_D: float
    quad_error: float

    def check(self) -> None:
        """Raise ``ValueError`` naming the first violated invariant."""
        if not 0 < self.d1 < 1:
            raise ValueError(f"CoefficientSet: d1 = {self.d1} outside (0, 1)")
        for name in ("d2", "mu", "d3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"CoefficientSet: {name} = {getattr(self, name)} not > 0")
        if self.diffusion_D < -POSITIVITY_SLACK:
            raise ValueError(f"CoefficientSet: diffusion_D = {self.diffusion_D} < 0")

    @property
    def d2_hat(self) -> float:
        return self.d2 / self.d1

    @property
    def mu_hat(self) -> float:
        return self.mu / self.d1


@dataclass(frozen=True)
class NonlocalConstant:
    r: float
    k: float


def interaction_k(r: float) -> NonlocalConstant:
    """Second moment of the unit-weight disc of radius ``r``: ``k = r^2/8``."""
    r = float(r)
    if not (r > 0 and math.isfinite(r)):
        raise ValueError(f"interaction radius must be > 0, got {r}")
    return NonlocalConstant(r, r * r / 8.0)


def _g_moment(table: GciTable, phi):
    """Unnormalized ``int_0^{pi/2} g phi exp(-kappa(1/cos - 1))``."""
    return moment_integral(table.kappa, lambda t: table.interpolate(t) * phi(t))


def compute_coefficients(kappa: float, gci_table: GciTable | None = None) -> CoefficientSet:
    kappa = float(kappa)
    table = gci_table if gci_table is not None else build_gci_table(kappa)
    if not math.isclose(table.kappa, kappa, rel_tol=1e-15):
        raise ValueError(f"GCI table built for kappa={table.kappa}, requested {kappa}")

    mass = moment_integral(kappa, lambda t: np.ones_like(t))
    mcos = moment_integral(kappa, np.cos)
    den = _g_moment(table, lambda t: np.sin(t) / np.cos(t) ** 2)
    n_d2 = _g_moment(table, lambda t: np.tan(t))
    n_mu = _g_moment(table, np.sin)
    n_d3 = _g_moment(table, lambda t: np.tan(t) ** 3)
    if abs(den.value) < 1e-14:
        raise ValueError("degenerate GCI table: <g sin/cos^2> vanishes")

    d1 = mcos.value / mass.value
    d2 = n_d2.value / den.value
    mu = n_mu.value / (kappa * den.value)
    d3 = 2.0 * n_d3.value / den.value

    def rel(q):
        return q.abs_error_estimate / abs(q.value) if q.value else q.abs_error_estimate

    quad_error = rel(mass) + rel(mcos) + 2 * rel(den) + rel(n_d2) + rel(n_mu) + rel(n_d3)
    return CoefficientSet(
        kappa=kappa,
        d1=d1,
        d2=d2,
        mu=mu,
        d3=d3,
        diffusion_D=d2 + d3 - mu - 2.0 / kappa,
        quad_error=quad_error,
    )


def diffusion_ab(kappa: float, table: GciTable) -> tuple[float, float]:
    """Numerator and denominator of ``D = A / B`` in the ``y = cos(theta)`` form.

    ``A = int_0^1 G(y) y^-3 e^{-kappa/y} [kappa(2 - y^2) - y(y^2 + 2)] dy`` with
    ``G(y) = g(arccos y)`` and ``B = kappa int_0^{pi/2} g e^{-kappa/cos} sin/cos^2``.
    Both carry the same ``exp(kappa)`` scaling.
    """

    def a_integrand(y):
        w = scaled_weight(kappa, y)
        out = np.zeros_like(y)
        live = w > 0
        yl = y[live]
        g = gci_eval(table, np.arccos(yl))
        out[live] = g / yl**3 * w[live] * (kappa * (2 - yl * yl) - yl * (yl * yl + 2))
        return out

    a = integrate_adaptive(a_integrand, (0.0, 1.0)).value
    b = kappa * _g_moment(table, lambda t: np.sin(t) / np.cos(t) ** 2).value
    return a, b


@dataclass(frozen=True)
class PositivityReport:
    rows: tuple[tuple[float, float], ...]
    min_D: float
    argmin_kappa: float
    flagged: tuple[float, ...]

    @property
    def ok(self) -> bool:
        return not self.flagged


def positivity_report(kappa_grid: Iterable[float], n_grid: int | None = None) -> PositivityReport:
    rows = []
    for kappa in kappa_grid:
        if not kappa > 0:
            raise ValueError(f"kappa must be > 0, got {kappa}")
        table = build_gci_table(kappa) if n_grid is None else build_gci_table(kappa, n_grid)
        rows.append((float(kappa), compute_coefficients(kappa, table).diffusion_D))
    if not rows:
        raise ValueError("empty kappa grid")
    kmin, dmin = min(rows, key=lambda r: r[1])
    flagged = tuple(k for k, d in rows if d < -POSITIVITY_SLACK)
    return PositivityReport(tuple(rows), dmin, kmin, flagged)


CACHE_FIELDS = ["kappa", "n_grid", "version", "d1", "d2", "mu", "d3", "diffusion_D", "quad_error"]


class CoefficientCache:
    """CSV cache of coefficient sets keyed by ``(kappa, n_grid, version)``."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def _rows(self) -> list[dict]:
        if not self.path.exists():
            return []
        with self.path.open(newline="", encoding="utf-8") as fh:
            return list(csv.DictReader(fh))

    def lookup(self, kappa: float, n_grid: int) -> CoefficientSet | None:
        for row in self._rows():
            if (float(row["kappa"]) == float(kappa) and int(row["n_grid"]) == n_grid
                    and row["version"] == __version__):
                return CoefficientSet(**{k: float(row[k]) for k in
                                         ("kappa", "d1", "d2", "mu", "d3", "diffusion_D", "quad_error")})
        return None

    def append(self, cs: CoefficientSet, n_grid: int) -> None:
        new = not self.path.exists()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(CACHE_FIELDS)
            d = asdict(cs)
            w.writerow([format_number(cs.kappa), n_grid, __version__]
                       + [format_number(d[k]) for k in CACHE_FIELDS[3:]])

    def get(self, kappa: float, n_grid: int = 4001) -> CoefficientSet:
        hit = self.lookup(kappa, n_grid)
        if hit is not None:
            return hit
        cs = compute_coefficients(kappa, build_gci_table(kappa, n_grid))
        self.append(cs, n_grid)
        return cs


def format_number(x: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return f"{float(x):.17g}"


def coefficient_lines(cs: CoefficientSet, nonlocal_k: NonlocalConstant | None = None) -> list[str]:
    items = [("kappa", cs.kappa), ("d1", cs.d1), ("d2", cs.d2), ("mu", cs.mu), ("d3", cs.d3),
             ("diffusion_D", cs.diffusion_D), ("d2_hat", cs.d2_hat), ("mu_hat", cs.mu_hat),
             ("quad_error", cs.quad_error)]
    if nonlocal_k is not None:
        items += [("r", nonlocal_k.r), ("k", nonlocal_k.k)]
    width = max(len(k) for k, _ in items)
    return [f"{k.ljust(width)} = {format_number(v)}" for k, v in items]


def coefficient_table(kappas: Sequence[float], n_grid: int = 4001) -> list[CoefficientSet]:
    return [compute_coefficients(k, build_gci_table(k, n_grid)) for k in kappas]
