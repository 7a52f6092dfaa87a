"""Critical surface quasi-geostrophic flow on the unit sphere, with fractional
Laplace-Beltrami operators and diagnostics of its a priori estimates."""

__version__ = "0.1.0"

from .fractional import (
    CommutatorProbe,
    SemigroupQuadrature,
    SingularKernel,
    calibrate_semigroup,
    commutator_apply,
    dirichlet_D,
    lambda_power,
    lambda_semigroup,
    lambda_singular,
    singular_kernel,
)
from .geometry import UnitVector, geodesic_distance, stereographic_project, stereographic_unproject
from .heat import heat_kernel
from .solver import InitialCondition, SimulationState, SolverConfig, compute_velocity, nonlinear_term, run, step
from .transform import Grid, PhysicalField, SpectralField, VelocityField, analyze, build_grid, synthesize

__all__ = [
    "CommutatorProbe",
    "Grid",
    "InitialCondition",
    "PhysicalField",
    "SemigroupQuadrature",
    "SimulationState",
    "SingularKernel",
    "SolverConfig",
    "SpectralField",
    "UnitVector",
    "VelocityField",
    "analyze",
    "build_grid",
    "calibrate_semigroup",
    "commutator_apply",
    "compute_velocity",
    "dirichlet_D",
    "geodesic_distance",
    "heat_kernel",
    "lambda_power",
    "lambda_semigroup",
    "lambda_singular",
    "nonlinear_term",
    "run",
    "singular_kernel",
    "step",
    "stereographic_project",
    "stereographic_unproject",
    "synthesize",
]
