import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import HEAT_DIAG_T1
from sqgsphere.acceptance import heat_mass, li_yau_constant
from sqgsphere.geometry import UnitVector, random_unit_vectors
from sqgsphere.heat import heat_kernel, heat_kernel_distance, log_heat_kernel, series_truncation


def test_diagonal_oracle():
    x = UnitVector(0.2, -0.4, 0.9)
    assert heat_kernel(x, x, 1.0) == pytest.approx(HEAT_DIAG_T1, abs=1e-15)
    assert abs(heat_kernel(x, x, 1.0) - 0.11289) <= 1e-4


def test_series_truncation_rule():
    L = series_truncation(0.01)
    assert (2 * L + 1) * math.exp(-L * (L + 1) * 0.01) < 1e-15
    assert series_truncation(1.0, L_min=40) == 40


@pytest.mark.parametrize("t", [1e-3, 1e-2, 0.1, 0.5, 1.0, 3.0])
def test_stochastic_completeness(t):
    assert heat_mass(t) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("t", [0.05, 0.15, 0.19, 0.25])
def test_images_agree_with_series(t):
    d = np.linspace(0, np.pi, 13)
    s = heat_kernel_distance(d, t, method="series")
    i = heat_kernel_distance(d, t, method="images")
    assert np.allclose(s, i, rtol=1e-9, atol=1e-14)


def test_symmetric():
    p, q = random_unit_vectors(2, 0)
    for t in (0.01, 0.3, 2.0):
        assert heat_kernel(p, q, t) == heat_kernel(q, p, t)


def test_positive_on_scan():
    for t in np.geomspace(1e-3, 1, 15):
        assert np.all(np.isfinite(log_heat_kernel(np.linspace(0, np.pi, 31), t)))
        assert np.all(heat_kernel_distance(np.linspace(0, np.pi, 31), t) >= 0)
    assert heat_kernel_distance(np.pi / 4, 0.01) > 0


def test_far_tail_is_log_finite():
    v = log_heat_kernel(np.pi, 1e-3)
    assert np.isfinite(v) and v < -2000


def test_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        heat_kernel_distance(0.1, 0.0)
    with pytest.raises(ValueError):
        log_heat_kernel(0.1, -1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(0.0, np.pi))
def test_li_yau_form_with_fitted_constant(t, d):
    C = li_yau_constant(np.geomspace(1e-3, 1, 13), np.linspace(0, np.pi, 25))
    assert log_heat_kernel(d, t) <= math.log(C) - math.log(t) - d * d / (5 * t) + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_semigroup_chapman_kolmogorov_on_diagonal(s, t):
    # int G(x,y,s) G(y,x,t) dy = G(x,x,s+t); both sides by Legendre orthogonality
    from scipy.special import roots_legendre

    xg, wg = roots_legendre(120)
    d = np.arccos(xg)
    lhs = 2 * np.pi * np.sum(wg * heat_kernel_distance(d, s) * heat_kernel_distance(d, t))
    assert lhs == pytest.approx(heat_kernel_distance(0.0, s + t), rel=1e-12)
