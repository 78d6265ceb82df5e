import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nematic_soh.coefficients import interaction_k
from nematic_soh.macro1d import (MacroState, SolverError, SolverParams, bands_state, delta_rate,
                                 diffusion_step, fold_line_difference, full_step, hyperbolic_step,
                                 local_reversal_fixed_points, reaction_step, reversal_source,
                                 reversal_threshold, riemann_state, run, sine_state, stable_dt,
                                 uniform_state)


def test_reversal_source_examples():
    assert reversal_source(0.7, 0.7, 1.0, 2.0) == (0.0, 0.0)
    # lambda1 rho+ rho- = lambda0
    sp, sm = reversal_source(2.0, 0.25, 0.5, 1.0)
    assert sp == pytest.approx(0.0, abs=1e-15) and sm == pytest.approx(0.0, abs=1e-15)
    sp, sm = reversal_source(2.0, 0.0, 1.0, 1.0)
    assert sp == -2.0 and sm == 2.0


@settings(max_examples=100)
@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 3), st.floats(0, 3))
def test_reversal_source_identity(rp, rm, l0, l1):
    sp, sm = reversal_source(rp, rm, l0, l1)
    assert sm == -sp
    d, s = rp - rm, rp + rm
    assert 2 * sp == pytest.approx(delta_rate(s, d, l0, l1), rel=1e-9, abs=1e-9)
    assert sp == pytest.approx(d * (l1 * rp * rm - l0), rel=1e-9, abs=1e-9)


def test_fixed_points():
    fps = local_reversal_fixed_points(1.0, 1.0, 1.0)
    assert [(f.delta, f.stable) for f in fps] == [(0.0, True)]
    fps = local_reversal_fixed_points(4.0, 1.0, 1.0)
    assert [f.delta for f in fps] == pytest.approx([-2 * math.sqrt(3), 0, 2 * math.sqrt(3)])
    assert [f.stable for f in fps] == [True, False, True]
    assert reversal_threshold(1.0, 1.0) == 2.0
    assert all(f.delta == 0 for f in local_reversal_fixed_points(2.0, 1.0, 1.0))


def _params(coeffs, **kw):
    return SolverParams(coeffs, **kw)


def test_uniform_state_is_stationary(coeffs2):
    s = uniform_state(50, 10.0, 0.7, 0.7, 0.4)
    p = _params(coeffs2, k_nonlocal=0.125, lambda0=1.0, lambda1=1.0, t_end=5.0)
    f = run(s, p).final
    np.testing.assert_array_equal(f.rho_plus, s.rho_plus)
    np.testing.assert_array_equal(f.rho_minus, s.rho_minus)
    np.testing.assert_array_equal(f.theta_bar, s.theta_bar)


def test_hyperbolic_step_conserves_mass(coeffs2):
    s = bands_state(100, 20.0)
    s = replace(s, theta_bar=0.3 * np.sin(2 * np.pi * s.x / 20))
    p = _params(coeffs2)
    for _ in range(50):
        m0 = s.mass()
        s = hyperbolic_step(s, p, stable_dt(s, p))
        assert abs(s.mass() - m0) <= 1e-12 * m0


def _advection_error(coeffs, n, t_end=3.0, L=10.0):
    s = sine_state(n, L, 1.0, 0.0, 0.0, 0.5, 1, "rho_plus")
    f = run(s, _params(coeffs, t_end=t_end)).final
    k = 2 * np.pi / L
    shift = coeffs.d1 * t_end
    # exact cell averages of the translated profile
    exact = 1 + 0.5 * (np.cos(k * (f.x - shift - f.dx / 2)) - np.cos(k * (f.x - shift + f.dx / 2))) / (k * f.dx)
    return float(np.sum(np.abs(f.rho_plus - exact)) * f.dx)


def test_advection_first_order(coeffs2):
    errors = [_advection_error(coeffs2, n) for n in (50, 100, 200)]
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    assert all(1.6 <= r <= 2.4 for r in ratios), ratios


def test_advection_against_fine_reference(coeffs2):
    # L1 error against an 8x finer run, averaged back to the coarse cells
    def final(n):
        s = riemann_state(n, 10.0, (1.0, 0.0, 0.0), (0.25, 0.0, 0.0))
        return run(s, _params(coeffs2, t_end=2.0)).final

    ref = final(1600)
    errs = []
    for n in (100, 200):
        f = final(n)
        coarse = ref.rho_plus.reshape(n, -1).mean(axis=1)
        errs.append(np.sum(np.abs(f.rho_plus - coarse)) * f.dx)
    # the Riemann datum is not smooth, so only require a clear decrease
    assert errs[1] < errs[0]
    f = final(200)
    assert np.all(f.rho_minus == 0) and np.all(f.theta_bar == 0)


def test_diffusion_step(coeffs2):
    p = _params(coeffs2, k_nonlocal=0.125)
    s = uniform_state(40, 10.0, 0.5, 0.5, 0.3)
    assert np.array_equal(diffusion_step(s, p, 0.1).theta_bar, s.theta_bar)
    s = sine_state(40, 10.0, 0.5, 0.5, 0.0, 0.3, 2, "theta")
    out = diffusion_step(s, p, 0.9 * stable_dt(s, p))
    assert out.theta_bar.max() <= s.theta_bar.max() and out.theta_bar.min() >= s.theta_bar.min()


def test_sine_mode_decay_rate(coeffs2):
    L, n = 10.0, 200
    k = interaction_k(1.0).k
    s = sine_state(n, L, 0.5, 0.5, 0.0, 0.01, 1, "theta")
    res = run(s, _params(coeffs2, k_nonlocal=k, t_end=2.0))

    def amp(st):
        return 2 * abs(np.sum(st.theta_bar * np.exp(-2j * np.pi * st.x / L))) / n

    rate = -math.log(amp(res.final) / amp(res.snapshots[0])) / res.final.time
    assert rate == pytest.approx(2 * k * coeffs2.diffusion_D * (2 * math.pi / L) ** 2, rel=0.05)


def test_reaction_step(coeffs2):
    p = _params(coeffs2, lambda0=1.0, lambda1=1.0)
    s = uniform_state(5, 1.0, 2.0, 2.0)
    assert np.array_equal(reaction_step(s, p, 0.1).rho_plus, s.rho_plus)
    s = MacroState(1.0, np.full(3, 2.05), np.full(3, 1.95), np.zeros(3))
    traj = []
    for _ in range(400):
        s = reaction_step(s, p, 0.01)
        traj.append(s.delta[0])
        assert np.max(np.abs(s.rho - 4.0)) <= 1e-14
    assert np.all(np.diff(traj) > -1e-15)
    assert traj[-1] == pytest.approx(2 * math.sqrt(3), abs=1e-6)


def test_equal_sides_keep_delta_zero_under_reversals(coeffs2):
    # delta = 0 is a fixed point of the reversal term, even where it is unstable
    rho = np.linspace(0.5, 5.0, 20)
    s = MacroState(0.5, rho / 2, rho / 2, np.linspace(-1, 1, 20))
    p = _params(coeffs2, lambda0=0.5, lambda1=1.0)
    for _ in range(100):
        s = reaction_step(s, p, 0.05)
    np.testing.assert_array_equal(s.rho_plus, s.rho_minus)
    np.testing.assert_array_equal(s.rho, rho)


def test_bands_conserve_mass_long_run(coeffs2):
    s = bands_state(100, 20.0)
    p = _params(coeffs2, k_nonlocal=0.125, lambda0=0.2, lambda1=0.1, t_end=1e9)
    res = run(s, p, stride=250, max_steps=2000)
    m = np.array([m for _, m in res.mass_log])
    assert np.max(np.abs(m - m[0])) <= 1e-10 * m[0]
    assert np.all(res.final.rho_plus >= 0) and np.all(res.final.rho_minus >= 0)


def test_theta_reflection_symmetry(coeffs2):
    s = sine_state(60, 10.0, 0.8, 0.3, 0.3, 0.2, 1, "theta")
    mirror = replace(s, theta_bar=-s.theta_bar)
    p = _params(coeffs2, k_nonlocal=0.125, t_end=2.0)
    a, b = run(s, p).final, run(mirror, p).final
    np.testing.assert_allclose(a.rho_plus, b.rho_plus, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(a.rho_minus, b.rho_minus, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(a.theta_bar, -b.theta_bar, atol=1e-12)


def test_fold_line_difference():
    d = np.array([0.1, math.pi - 0.1, -math.pi + 0.1, math.pi / 2])
    np.testing.assert_allclose(fold_line_difference(d), [0.1, -0.1, 0.1, math.pi / 2])


def test_state_and_param_validation(coeffs2):
    with pytest.raises(ValueError):
        MacroState(0.1, [1, -1, 1], [0, 0, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        MacroState(0.1, [1, 1], [0, 0], [0, 0])
    with pytest.raises(ValueError):
        SolverParams(coeffs2, cfl=1.0)
    with pytest.raises(ValueError):
        SolverParams(coeffs2, boundary="wall")
    s = MacroState(0.1, [1, 1, 1], [0, 0, 0], [3.0, 0, 0])
    assert s.theta_bar[0] == pytest.approx(3.0 - math.pi)


def test_full_step_rejects_huge_dt(coeffs2):
    s = riemann_state(50, 10.0, (1.0, 0.0, 0.0), (0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        full_step(s, _params(coeffs2), 50 * stable_dt(s, _params(coeffs2)))
    with pytest.raises(SolverError):
        run(s, _params(coeffs2, t_end=1.0), dt=1e-300)
