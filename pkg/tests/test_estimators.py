import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sqgsphere.estimators import FractionalLaplacian, SphericalHarmonicTransformer, SQGSolver
from sqgsphere.fractional import lambda_power
from sqgsphere.geometry import random_unit_vectors
from sqgsphere.transform import SpectralField, build_grid, evaluate, synthesize


def samples(L, n=3, hi=None):
    g = build_grid(L)
    rng = np.random.default_rng(4)
    fields = [SpectralField.random(L, rng, 1, hi or L) for _ in range(n)]
    return fields, np.stack([synthesize(f, g).values.reshape(-1) for f in fields])


def test_params_and_clone():
    est = FractionalLaplacian(alpha=0.5, L_max=8)
    assert est.get_params()["alpha"] == 0.5
    c = clone(est).set_params(method="semigroup")
    assert (c.alpha, c.method) == (0.5, "semigroup")


def test_transformer_round_trip():
    fields, X = samples(10)
    t = SphericalHarmonicTransformer(L_max=10).fit(X)
    Z = t.transform(X)
    assert Z.shape == (3, 2 * 121)
    assert np.allclose(Z[0, :121] + 1j * Z[0, 121:], fields[0].coeffs, atol=1e-12)
    assert np.allclose(t.inverse_transform(Z), X, atol=1e-12)


def test_unfitted_and_bad_width():
    _, X = samples(6)
    with pytest.raises(NotFittedError):
        SphericalHarmonicTransformer(L_max=6).transform(X)
    with pytest.raises(ValueError, match="features"):
        SphericalHarmonicTransformer(L_max=8).fit(X).transform(X)


def test_fractional_spectral_matches_multiplier():
    fields, X = samples(8)
    Y = FractionalLaplacian(alpha=1.0, L_max=8).fit_transform(X)
    g = build_grid(8)
    assert np.allclose(Y[1], synthesize(lambda_power(fields[1], 1.0), g).values.reshape(-1), atol=1e-10)


def test_fractional_pointwise_methods():
    fields, X = samples(6, n=1, hi=4)
    pts = random_unit_vectors(4, 2)
    ref = evaluate(lambda_power(fields[0], 1.0), pts)
    sg = FractionalLaplacian(alpha=1.0, L_max=6, method="semigroup", points=pts).fit_transform(X)
    assert np.allclose(sg[0], ref, atol=1e-9 * np.max(np.abs(ref)))
    sing = FractionalLaplacian(alpha=1.0, L_max=6, method="singular", points=pts, quad_L=64).fit_transform(X)
    assert np.max(np.abs(sing[0] - ref)) <= 0.05 * np.max(np.abs(ref))


def test_fractional_needs_points():
    with pytest.raises(ValueError, match="points"):
        FractionalLaplacian(method="singular").fit(np.zeros((1, 4)))


def test_solver_fit_and_predict_agree():
    fields, X = samples(10, n=2, hi=5)
    est = SQGSolver(L_max=10, dt=5e-3, t_end=0.05, sample_every=5)
    est.fit(X[:1])
    assert len(est.records_) == 3
    assert est.final_state_.step_index == 10
    Y = est.predict(X)
    g = build_grid(10)
    assert np.allclose(Y[0], synthesize(est.final_state_.theta, g).values.reshape(-1), atol=1e-13)
    assert np.max(np.abs(Y[1])) <= np.max(np.abs(X[1])) + 1e-9


def test_solver_fit_from_initial_condition_string():
    est = SQGSolver(L_max=8, dt=5e-3, t_end=0.02, initial_condition="zonal:2").fit()
    rec = est.records_[-1]
    assert rec.l2 == pytest.approx(np.exp(-np.sqrt(6) * 0.02), rel=1e-10)
