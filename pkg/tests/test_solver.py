import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import Y10_EQUATOR_SPEED
from sqgsphere.solver import (
    CFLError,
    ConfigError,
    InitialCondition,
    SimulationState,
    SolverConfig,
    compute_velocity,
    nonlinear_term,
    run,
    step,
)
from sqgsphere.transform import SpectralField, build_grid, divergence, sup_norm, synthesize


def rand_theta(L, seed, hi=None):
    return InitialCondition.random_band(1, hi or L, 1.0, seed).build(L)


# config -------------------------------------------------------------------


def test_config_defaults():
    c = SolverConfig()
    assert (c.L_max, c.dt, c.alpha, c.nu, c.dealias_fraction) == (64, 1e-3, 1.0, 0.0, 2 / 3)
    assert c.dealias_degree == 42


@pytest.mark.parametrize(
    "kw, word",
    [({"dt": -1.0}, "dt > 0"), ({"alpha": 2.5}, "alpha"), ({"nu": -1.0}, "nu"), ({"dealias_fraction": 0.4}, "dealias"), ({"L_max": 1}, "L_max")],
)
def test_config_rejects_invariant_violations(kw, word):
    with pytest.raises(ConfigError, match=word):
        SolverConfig(**kw)


def test_linear_symbol():
    c = SolverConfig(L_max=4, alpha=1.0, nu=0.1)
    lam = c.linear_symbol()
    assert lam[0] == 0.0
    assert lam[6] == pytest.approx(np.sqrt(6) + 0.6)


# velocity and nonlinear term ----------------------------------------------


def test_velocity_examples():
    assert np.max(compute_velocity(SpectralField.zeros(8)).magnitude()) == 0.0
    g = build_grid(8)
    u = compute_velocity(SpectralField.harmonic(8, 1, 0), g)
    speed = u.magnitude()
    assert np.max(speed) == pytest.approx(Y10_EQUATOR_SPEED * np.max(g.sin_colat), rel=1e-13)
    # finite difference of psi = Y_10/sqrt 2 across the equator
    h = 1e-6
    psi = lambda t: np.sqrt(3 / (4 * np.pi)) * np.cos(t) / np.sqrt(2)
    assert abs((psi(np.pi / 2 + h) - psi(np.pi / 2 - h)) / (2 * h)) == pytest.approx(Y10_EQUATOR_SPEED, rel=1e-8)


def test_velocity_requires_mean_zero():
    with pytest.raises(ValueError):
        compute_velocity(SpectralField.constant(4))


@pytest.mark.parametrize("seed", range(3))
def test_velocity_divergence_free(seed):
    u = compute_velocity(rand_theta(24, seed))
    assert divergence(u).norm() <= 1e-8 * u.l2_norm()


@pytest.mark.parametrize("l", [1, 2, 5, 11])
def test_zonal_nonlinear_term_vanishes(l):
    assert nonlinear_term(SpectralField.harmonic(32, l, 0)).norm() <= 1e-11


def test_nonlinear_of_zero():
    assert nonlinear_term(SpectralField.zeros(16)).norm() == 0.0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([12, 24, 32]))
def test_nonlinear_conserves_mean_and_energy(seed, L):
    th = rand_theta(L, seed)
    nl = nonlinear_term(th)
    assert abs(nl.coeffs[0]) <= 1e-12
    assert abs(th.low_pass(2 * L // 3).dot(nl)) <= 1e-9 * th.norm() * nl.norm()


def test_nonlinear_matches_direct_product():
    # without dealiasing at the product degree, the advective term is the exact product
    from sqgsphere.fractional import lambda_power
    from sqgsphere.transform import evaluate, perp_gradient, surface_gradient
    from sqgsphere.geometry import random_unit_vectors

    th = rand_theta(6, 3)
    nl = nonlinear_term(th.resized(18))
    x = random_unit_vectors(6, 1)
    g = build_grid(18)
    pts = g.unit_vectors()
    u = perp_gradient(lambda_power(th, -1.0).resized(18), g)
    gr = surface_gradient(th.resized(18), g)
    direct = u.u_colat * gr.u_colat + u.u_lon * gr.u_lon
    assert np.allclose(synthesize(nl, g).values, direct, atol=1e-12)
    assert np.all(np.isfinite(evaluate(nl, x))) and pts.shape[-1] == 3


# time stepping ------------------------------------------------------------


def test_zonal_step_is_exact():
    c = SolverConfig(L_max=16, dt=0.01)
    th = SpectralField.harmonic(16, 2, 0)
    new = step(SimulationState(0.0, th), c).theta
    assert new.coeffs[6] == pytest.approx(np.exp(-np.sqrt(6) * 0.01), rel=1e-15)


def test_zero_stays_zero():
    c = SolverConfig(L_max=8, dt=0.01)
    assert step(SimulationState(0.0, SpectralField.zeros(8)), c).theta.norm() == 0.0


@pytest.mark.parametrize("seed", range(4))
def test_one_step_l2_nonincreasing(seed):
    c = SolverConfig(L_max=24, dt=2e-3)
    th = rand_theta(24, seed, hi=12)
    new = step(SimulationState(0.0, th), c).theta
    assert new.norm() ** 2 <= th.norm() ** 2 + 1e-12
    assert abs(new.coeffs[0]) <= 1e-13
    assert new.reality_defect() <= 1e-13


def test_zonal_run_exact_solution():
    final = run(InitialCondition.zonal(2), SolverConfig(L_max=32, dt=1e-3, t_end=1.0))
    g = build_grid(32)
    exact = SpectralField.harmonic(32, 2, 0) * np.exp(-np.sqrt(6))
    assert final.time == 1.0 and final.step_index == 1000
    assert np.max(np.abs(synthesize(final.theta, g).values - synthesize(exact, g).values)) <= 1e-6


@pytest.mark.parametrize("l", [1, 4, 8])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_zonal_exactness_all_degrees(l, alpha):
    c = SolverConfig(L_max=16, dt=0.01, t_end=0.2, alpha=alpha)
    final = run(InitialCondition.zonal(l), c).theta
    rate = (l * (l + 1.0)) ** (alpha / 2)
    assert final.coeffs[l * l + l] == pytest.approx(np.exp(-rate * 0.2), rel=1e-13)


def test_run_is_deterministic():
    c = SolverConfig(L_max=16, dt=5e-3, t_end=0.1, sample_every=5, seed=4)
    ic = InitialCondition.random_band(1, 8)
    seen = [[], []]
    a = run(ic, c, [lambda s: seen[0].append(s.theta.coeffs.tobytes())])
    b = run(ic, c, [lambda s: seen[1].append(s.theta.coeffs.tobytes())])
    assert seen[0] == seen[1] and a.theta.coeffs.tobytes() == b.theta.coeffs.tobytes()
    assert len(seen[0]) == 1 + 20 // 5


def test_sinks_receive_samples():
    times = []
    run(InitialCondition.zonal(1), SolverConfig(L_max=8, dt=0.01, t_end=0.1, sample_every=3), [lambda s: times.append(s.step_index)])
    assert times == [0, 3, 6, 9, 10]


def test_cfl_abort_carries_state():
    c = SolverConfig(L_max=32, dt=0.2, t_end=1.0)
    with pytest.raises(CFLError) as info:
        run(InitialCondition.random_band(1, 10, 5.0, 1), c)
    assert info.value.state.step_index == 0


def test_vanishing_viscosity_trend():
    ic = InitialCondition.random_band(1, 8, 1.0, 2)
    base = SolverConfig(L_max=24, dt=2e-3, t_end=1.0)
    ref = run(ic, base).theta
    d = [(run(ic, SolverConfig(L_max=24, dt=2e-3, t_end=1.0, nu=nu)).theta - ref).norm() for nu in (1e-3, 1e-4)]
    assert d[1] < d[0]


def test_resolution_convergence():
    ic = InitialCondition.random_band(1, 4, 1.0, 3)
    prev, diffs = None, []
    for L, dt in [(8, 8e-3), (16, 4e-3), (32, 2e-3), (64, 1e-3)]:
        th = run(ic, SolverConfig(L_max=L, dt=dt, t_end=1.0)).theta.resized(64)
        if prev is not None:
            diffs.append((th - prev).norm())
        prev = th
    assert all(b < 0.5 * a for a, b in zip(diffs, diffs[1:]))


# initial conditions -------------------------------------------------------


@pytest.mark.parametrize("text", ["zonal:3", "zonal:2:0.5", "random:1:8", "random:2:6:0.3:9", "pair:1.0:0.2", "pair:0.5:0.3:2"])
def test_initial_conditions_are_real_mean_zero(text):
    ic = InitialCondition.parse(text)
    f = ic.build(24, seed=1)
    assert f.L_max == 24
    assert abs(f.coeffs[0]) <= 1e-14
    assert f.reality_defect() <= 1e-13
    assert InitialCondition.parse(str(ic)) == ic


def test_random_amplitude_is_peak_value():
    f = InitialCondition.random_band(1, 6, 0.7, 3).build(12)
    assert sup_norm(f, oversample=4) == pytest.approx(0.7, rel=1e-9)
    assert np.max(np.abs(synthesize(f, build_grid(48)).values)) <= 0.7 * (1 + 1e-12)


@pytest.mark.parametrize("text", ["zonal", "wave:1", "random:5", "pair:a:b", "zonal:x"])
def test_bad_initial_condition_strings(text):
    with pytest.raises(ValueError):
        InitialCondition.parse(text)


def test_initial_condition_band_limit():
    with pytest.raises(ValueError):
        InitialCondition.zonal(20).build(16)
    with pytest.raises(ValueError):
        InitialCondition.random_band(1, 20).build(16)
