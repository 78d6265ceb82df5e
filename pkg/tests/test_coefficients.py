import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from nematic_soh.coefficients import (CoefficientCache, _g_moment, compute_coefficients, diffusion_ab,
                                      interaction_k, positivity_report)
from nematic_soh.gci import build_gci_table


def test_signs_and_bounds(coeffs2):
    cs = coeffs2
    cs.check()
    assert cs.d2 > 0 and cs.mu > 0 and cs.d3 > 0 and 0 < cs.d1 < 1
    table = build_gci_table(2.0)
    assert _g_moment(table, np.sin).value < 0
    assert _g_moment(table, lambda t: np.sin(t) / np.cos(t) ** 2).value < 0
    assert cs.d2_hat == cs.d2 / cs.d1 and cs.mu_hat == cs.mu / cs.d1


def test_d1_increases_with_kappa():
    assert compute_coefficients(10.0).d1 > compute_coefficients(0.5).d1


@pytest.mark.parametrize("kappa", [0.5, 2.0, 10.0])
def test_against_composite_oracle(kappa):
    cs = compute_coefficients(kappa)
    ref = oracles.coefficients(kappa)
    for name, value in ref.items():
        assert getattr(cs, name) == pytest.approx(value, rel=1e-8), name


def test_interaction_k():
    assert interaction_k(1).k == 0.125
    assert interaction_k(2).k == 0.5
    assert interaction_k(0.5).k == 0.03125
    with pytest.raises(ValueError):
        interaction_k(0)


@given(st.floats(1e-3, 1e3))
def test_k_is_quadratic(r):
    assert interaction_k(2 * r).k == 4 * interaction_k(r).k


def test_positivity_report_and_ab_form():
    grid = [0.1, 0.5, 1, 2, 5, 10, 20, 50]
    rep = positivity_report(grid)
    assert rep.ok and rep.min_D >= 0
    assert rep == positivity_report(grid)
    for kappa, D in rep.rows[::3]:
        a, b = diffusion_ab(kappa, build_gci_table(kappa))
        assert a / b == pytest.approx(D, rel=1e-8)
    with pytest.raises(ValueError):
        positivity_report([])


def test_cache_roundtrip(tmp_path):
    cache = CoefficientCache(tmp_path / "c.csv")
    cs = cache.get(2.0, 1001)
    assert cache.lookup(2.0, 1001) == cs
    assert cache.lookup(2.0, 4001) is None
    with pytest.raises(ValueError):
        compute_coefficients(3.0, build_gci_table(2.0, 101))
