"""scikit-learn style wrappers.

Samples are real fields given by their values on the Gauss-Legendre grid of
degree ``L_max``, flattened row-major to ``n_lat * n_lon`` features.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .fractional import calibrate_semigroup, lambda_power, lambda_semigroup, lambda_singular, singular_kernel
from .solver import InitialCondition, SimulationState, SolverConfig, run, step
from .transform import PhysicalField, SpectralField, analyze, build_grid, synthesize

__all__ = ["SphericalHarmonicTransformer", "FractionalLaplacian", "SQGSolver"]


def _grid_fields(X, L_max):
    grid = build_grid(L_max)
    X = check_array(X, dtype=float)
    if X.shape[1] != grid.n_lat * grid.n_lon:
        raise ValueError(f"expected {grid.n_lat * grid.n_lon} features for L_max={L_max}, got {X.shape[1]}")
    return grid, [analyze(PhysicalField(grid, row.reshape(grid.shape))) for row in X]


def _grid_values(fields, grid):
    return np.stack([synthesize(f, grid).values.reshape(-1) for f in fields])


class SphericalHarmonicTransformer(TransformerMixin, BaseEstimator):
    """Grid values to coefficients, as ``[Re a, Im a]`` in the ``(l, m)`` layout."""

    def __init__(self, L_max: int = 32):
        self.L_max = L_max

    def fit(self, X, y=None):
        grid = build_grid(self.L_max)
        check_array(X, dtype=float)
        self.grid_shape_ = grid.shape
        self.n_features_in_ = grid.n_lat * grid.n_lon
        return self

    def transform(self, X):
        check_is_fitted(self)
        _, fields = _grid_fields(X, self.L_max)
        C = np.stack([f.coeffs for f in fields])
        return np.hstack([C.real, C.imag])

    def inverse_transform(self, Z):
        check_is_fitted(self)
        Z = check_array(Z, dtype=float)
        n = (self.L_max + 1) ** 2
        if Z.shape[1] != 2 * n:
            raise ValueError(f"expected {2 * n} columns, got {Z.shape[1]}")
        fields = [SpectralField(self.L_max, z[:n] + 1j * z[n:]) for z in Z]
        return _grid_values(fields, build_grid(self.L_max))


class FractionalLaplacian(TransformerMixin, BaseEstimator):
    """``Lambda^alpha`` of each sample.

    ``method="spectral"`` returns grid values.  ``"semigroup"`` and
    ``"singular"`` are pointwise and return values at ``points`` (an
    ``(n, 3)`` array), which is then required.
    """

    def __init__(self, alpha: float = 1.0, L_max: int = 32, method: str = "spectral", points=None, quad_L: int = 128):
        self.alpha = alpha
        self.L_max = L_max
        self.method = method
        self.points = points
        self.quad_L = quad_L

    def fit(self, X, y=None):
        if self.method not in ("spectral", "semigroup", "singular"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method != "spectral" and self.points is None:
            raise ValueError(f"method {self.method!r} needs points")
        check_array(X, dtype=float)
        self.n_features_in_ = int(np.prod(build_grid(self.L_max).shape))
        if self.method == "semigroup":
            self.quadrature_ = calibrate_semigroup(self.alpha)
        elif self.method == "singular":
            self.kernel_ = singular_kernel(self.alpha, self.quad_L)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        grid, fields = _grid_fields(X, self.L_max)
        if self.method == "spectral":
            return _grid_values([lambda_power(f, self.alpha) for f in fields], grid)
        pts = np.asarray(self.points, dtype=float)
        if self.method == "semigroup":
            return np.stack([lambda_semigroup(f, pts, self.alpha, self.quadrature_) for f in fields])
        return np.stack([lambda_singular(f, pts, self.kernel_) for f in fields])


class SQGSolver(BaseEstimator):
    """SQG integrator.

    ``fit`` runs one simulation, from the single sample in ``X`` or, when
    ``X`` is ``None``, from ``initial_condition``; diagnostics land in
    ``records_`` and the last state in ``final_state_``.  ``predict`` evolves
    every sample of ``X`` to ``t_end`` and returns grid values.
    """

    def __init__(
        self,
        L_max: int = 32,
        dt: float = 1e-3,
        t_end: float = 1.0,
        alpha: float = 1.0,
        nu: float = 0.0,
        dealias_fraction: float = 2.0 / 3.0,
        sample_every: int = 10,
        seed: int = 0,
        initial_condition: str = "random:1:10:1.0",
    ):
        self.L_max = L_max
        self.dt = dt
        self.t_end = t_end
        self.alpha = alpha
        self.nu = nu
        self.dealias_fraction = dealias_fraction
        self.sample_every = sample_every
        self.seed = seed
        self.initial_condition = initial_condition

    def _config(self) -> SolverConfig:
        return SolverConfig(
            L_max=self.L_max, dt=self.dt, t_end=self.t_end, alpha=self.alpha, nu=self.nu,
            dealias_fraction=self.dealias_fraction, sample_every=self.sample_every, seed=self.seed,
        )

    def _evolve(self, theta: SpectralField, config: SolverConfig, sinks=()):
        theta = theta.copy()
        theta.coeffs[0] = 0.0
        state = SimulationState(0.0, theta, 0)
        for s in sinks:
            s(state)
        for i in range(1, config.n_steps + 1):
            state = step(state, config)
            state = SimulationState(i * config.dt, state.theta, i)
            if i % config.sample_every == 0 or i == config.n_steps:
                for s in sinks:
                    s(state)
        return state

    def fit(self, X=None, y=None):
        from .diagnostics import Recorder

        config = self._config()
        rec = Recorder(config.alpha)
        if X is None:
            self.final_state_ = run(InitialCondition.parse(self.initial_condition), config, [rec])
        else:
            _, fields = _grid_fields(X, self.L_max)
            if len(fields) != 1:
                raise ValueError("fit takes a single initial field")
            self.final_state_ = self._evolve(fields[0], config, [rec])
        self.records_ = rec.records
        self.n_features_in_ = int(np.prod(build_grid(self.L_max).shape))
        return self

    def predict(self, X):
        check_is_fitted(self, "final_state_")
        grid, fields = _grid_fields(X, self.L_max)
        config = self._config()
        return _grid_values([self._evolve(f, config).theta for f in fields], grid)
