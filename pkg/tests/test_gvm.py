import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nematic_soh import gvm
from nematic_soh.numerics import RandomStream, integrate_adaptive

HALF_PI = math.pi / 2


def half_integrals(params):
    f = lambda t: gvm.density(params, t)  # noqa: E731
    t0 = params.theta0
    plus = integrate_adaptive(f, (t0 - HALF_PI, t0 + HALF_PI)).value
    minus = integrate_adaptive(f, (t0 + HALF_PI, t0 + 3 * HALF_PI)).value
    return plus, minus


def test_partition_function():
    z = {k: gvm.partition_function(k) for k in (0.5, 2.0, 10.0)}
    assert z[10.0] < z[2.0] < z[0.5] < math.pi
    assert z[2.0] == pytest.approx(oracles.partition(2.0), rel=1e-10)
    with pytest.raises(ValueError):
        gvm.partition_function(0.0)
    with pytest.raises(ValueError):
        gvm.GvmParams(-1.0)


def test_density_examples():
    p = gvm.GvmParams(2.0, 0.4)
    assert gvm.density(p, p.theta0 + HALF_PI) == 0.0
    assert gvm.density(p, p.theta0 - HALF_PI) == 0.0
    s = np.linspace(0, 3, 13)
    np.testing.assert_allclose(gvm.density(p, p.theta0 + s), gvm.density(p, p.theta0 - s), rtol=1e-14)
    plus, minus = half_integrals(p)
    assert plus == pytest.approx(1.0, abs=1e-10)
    assert minus == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 60), st.floats(-HALF_PI, HALF_PI, exclude_max=True))
def test_normalization_property(kappa, theta0):
    plus, minus = half_integrals(gvm.GvmParams(kappa, theta0))
    assert abs(plus - 1) < 1e-9 and abs(minus - 1) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 20), st.floats(-3, 3), st.floats(-3, 3))
def test_translation_covariance(kappa, theta0, theta):
    shifted = gvm.density(gvm.GvmParams(kappa, theta0), theta)
    base = gvm.density(gvm.GvmParams(kappa, 0.0), theta - theta0)
    assert shifted == pytest.approx(base, rel=1e-12, abs=1e-300)


def test_theta0_is_folded():
    assert gvm.GvmParams(1.0, math.pi / 2).theta0 == pytest.approx(-math.pi / 2)
    assert gvm.GvmParams(1.0, 3.0).theta0 == pytest.approx(3.0 - math.pi)


def test_moments():
    assert gvm.moment(2.0, np.ones_like) == pytest.approx(1.0, rel=1e-12)
    assert gvm.moment(2.0, np.sin) > 0
    p = gvm.GvmParams(2.0)
    sym = integrate_adaptive(lambda t: np.sin(t) * gvm.density(p, t), (-HALF_PI, HALF_PI)).value
    assert abs(sym) < 1e-14
    d1 = gvm.moment(2.0, np.cos)
    assert 0 < d1 < 1
    assert d1 == pytest.approx(oracles.moment(2.0, np.cos), rel=1e-10)


def test_mean_cosine_increases_with_kappa():
    grid = [0.01, 0.1, 0.5, 1, 2, 5, 10, 50, 200]
    m = [gvm.moment(k, np.cos) for k in grid]
    assert all(a < b for a, b in zip(m, m[1:]))
    assert m[0] < 0.7 and m[-1] > 0.99


def test_equilibrium_density():
    eq = gvm.EquilibriumParams(1.0, 0.0, 0.3)
    f = lambda t: gvm.equilibrium_density(eq, 2.0, t)  # noqa: E731
    assert integrate_adaptive(f, (0.3 - HALF_PI, 0.3 + HALF_PI)).value == pytest.approx(1.0, abs=1e-10)
    assert integrate_adaptive(f, (0.3 + HALF_PI, 0.3 + 3 * HALF_PI)).value == 0.0
    eq = gvm.EquilibriumParams(1.0, 1.0, 0.3)
    t = np.linspace(-3, 0, 17)
    np.testing.assert_allclose(gvm.equilibrium_density(eq, 2.0, t),
                               gvm.equilibrium_density(eq, 2.0, t + math.pi), rtol=1e-12)
    with pytest.raises(ValueError):
        gvm.EquilibriumParams(-1.0, 0.0)


def test_nematic_current_magnitude():
    eq = gvm.EquilibriumParams(2.0, 1.0, 0.0)
    f = lambda t: gvm.equilibrium_density(eq, 2.0, t)  # noqa: E731
    jx = integrate_adaptive(lambda t: np.cos(2 * t) * f(t), (-math.pi, math.pi)).value
    jy = integrate_adaptive(lambda t: np.sin(2 * t) * f(t), (-math.pi, math.pi)).value
    expected = 3.0 * gvm.moment(2.0, lambda t: np.cos(2 * t))
    assert math.hypot(jx, jy) == pytest.approx(expected, rel=1e-8)


def test_sampling():
    rng = RandomStream(3)
    p = gvm.GvmParams(2.0, 0.7)
    plus = gvm.sample(p, "plus", 10**5, rng)
    minus = gvm.sample(p, "minus", 1000, rng)
    assert np.all(np.cos(plus - p.theta0) > 0)
    assert np.all(np.cos(minus - p.theta0) < 0)
    c = np.cos(plus - p.theta0)
    se = c.std() / math.sqrt(c.size)
    assert abs(c.mean() - gvm.moment(2.0, np.cos)) < 3 * se
    tight = gvm.sample(gvm.GvmParams(50.0), "plus", 10**4, rng)
    sd_theory = math.sqrt(gvm.moment(50.0, lambda t: t * t))
    assert tight.std() < 0.2
    assert tight.std() == pytest.approx(sd_theory, rel=0.05)
    with pytest.raises(ValueError):
        gvm.sample(p, "up", 10, rng)
