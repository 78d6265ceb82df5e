import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nematic_soh.numerics import (Interval, QuadratureError, RandomStream, cubic_roots,
                                  cumulative_integral, integrate_adaptive, rng_stream,
                                  solve_cubic_real)


def test_quadrature_antiderivatives():
    assert integrate_adaptive(np.sin, (0.0, math.pi)).value == pytest.approx(2.0, rel=1e-13)
    assert integrate_adaptive(lambda x: x * x, (0.0, 1.0)).value == pytest.approx(1 / 3, rel=1e-14)


def test_quadrature_against_composite_oracle():
    def f(t):
        with np.errstate(divide="ignore", over="ignore"):
            return np.exp(-2.0 / np.cos(t))

    ours = integrate_adaptive(f, (0.0, math.pi / 2)).value
    t = oracles.fine_grid(10**6 + 1)
    ref = oracles.simpson(oracles.raw_weight(2.0, t), x=t)
    assert ours == pytest.approx(ref, rel=1e-10)


def test_quadrature_linearity():
    f, g = np.sin, np.exp
    a, b = 2.5, -1.25
    iv = (0.0, 2.0)
    lhs = integrate_adaptive(lambda x: a * f(x) + b * g(x), iv).value
    rhs = a * integrate_adaptive(f, iv).value + b * integrate_adaptive(g, iv).value
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-13)


def test_quadrature_errors():
    with pytest.raises(ValueError):
        Interval(1.0, 1.0)
    with pytest.raises(ValueError):
        integrate_adaptive(np.sin, (0.0, math.inf))
    with pytest.raises(QuadratureError) as info:
        integrate_adaptive(lambda x: 1 / np.abs(x - 0.3), (0.0, 1.0), max_subdivisions=20)
    assert info.value.best.value > 0


def test_cumulative_integral_examples():
    np.testing.assert_allclose(cumulative_integral([0, 0.5, 1], [1, 1, 1]), [0, 0.5, 1.0])
    np.testing.assert_allclose(cumulative_integral([0, 1], [0, 1]), [0, 0.5])
    x = np.linspace(0, math.pi, 1001)
    # plain trapezoid is h^2/12 * 2 = 1.6e-6 off here; the fourth-order
    # option meets 1e-6 with a wide margin
    assert abs(cumulative_integral(x, np.sin(x), order=4)[-1] - 2) < 1e-11
    assert abs(cumulative_integral(x, np.sin(x))[-1] - 2) < 2e-6
    fine = np.linspace(0, math.pi, 2001)
    assert abs(cumulative_integral(fine, np.sin(fine))[-1] - 2) < 1e-6


def test_cumulative_integral_rejects_bad_grid():
    with pytest.raises(ValueError):
        cumulative_integral([0, 1, 1], [0, 1, 2])
    with pytest.raises(ValueError):
        cumulative_integral([0, 1], [0, 1], order=3)


def test_cubic_examples():
    assert solve_cubic_real(1, 0, -1, 0) == pytest.approx([-1, 0, 1], abs=1e-14)
    assert solve_cubic_real(1, 0, 0, 0) == [0.0, 0.0, 0.0]
    # (z - 0.3)(z - 0.7)(z + 2)
    a2 = -(0.3 + 0.7 - 2)
    a1 = 0.3 * 0.7 - 2 * 0.3 - 2 * 0.7
    a0 = 0.3 * 0.7 * 2
    assert solve_cubic_real(1, a2, a1, a0) == pytest.approx([-2, 0.3, 0.7], abs=1e-13)
    with pytest.raises(ValueError):
        solve_cubic_real(0, 1, 1, 1)


def test_cubic_double_root_and_complex_pair():
    # (z - 1)^2 (z + 2) = z^3 - 3z + 2
    assert solve_cubic_real(1, 0, -3, 2) == pytest.approx([-2, 1, 1], abs=1e-7)
    roots = cubic_roots(1, 0, 1, 0)  # z (z^2 + 1)
    assert roots[0] == 0
    assert sorted(z.imag for z in roots[1:]) == pytest.approx([-1, 1])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(0.1, 4))
def test_cubic_vieta(roots, lead):
    r1, r2, r3 = roots
    a3 = lead
    a2 = -lead * (r1 + r2 + r3)
    a1 = lead * (r1 * r2 + r1 * r3 + r2 * r3)
    a0 = -lead * r1 * r2 * r3
    z = cubic_roots(a3, a2, a1, a0)
    scale = 1 + sum(abs(r) for r in roots)
    real = sorted(w.real for w in z if w.imag == 0)
    if len(real) == 3:
        np.testing.assert_allclose(real, sorted(roots), atol=1e-6 * scale)
    assert abs(sum(z) + a2 / a3) <= 1e-8 * scale
    assert abs(z[0] * z[1] * z[2] + a0 / a3) <= 1e-8 * scale**3


def test_rng_determinism_and_moments():
    a, b = rng_stream(42), rng_stream(42)
    np.testing.assert_array_equal(a.uniform(10**4), b.uniform(10**4))
    np.testing.assert_array_equal(a.normal(10**4), b.normal(10**4))
    r = RandomStream(7)
    assert abs(r.normal(10**6).mean()) < 5e-3
    assert abs(r.uniform(10**6).mean() - 0.5) < 2e-3
    assert RandomStream.algorithm == "PCG64"
