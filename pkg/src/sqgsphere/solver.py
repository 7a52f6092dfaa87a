"""Critical SQG on the unit sphere.

Solves ``theta_t + u . grad theta + Lambda^alpha theta = nu Laplacian theta``
with ``u = n x grad Lambda^{-1} theta``.  The linear part is integrated
exactly in spectral space; the advection term is computed pseudospectrally
and advanced with a two-stage (Heun) update under the integrating factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Iterable

import numpy as np

from .fractional import lambda_power
from .geometry import UnitVector, geodesic_distances
from .transform import (
    PhysicalField,
    SpectralField,
    VelocityField,
    analyze,
    build_grid,
    perp_gradient,
    sup_norm,
    surface_gradient,
)

__all__ = [
    "ConfigError",
    "CFLError",
    "SolverConfig",
    "SimulationState",
    "InitialCondition",
    "compute_velocity",
    "nonlinear_term",
    "step",
    "run",
    "CFL_LIMIT",
]

CFL_LIMIT = 0.8
MEAN_TOL = 1e-12


class ConfigError(ValueError):
    """A solver configuration violates one of its invariants."""


class CFLError(RuntimeError):
    """The advective CFL number exceeded the limit; ``state`` is the last good state."""

    def __init__(self, message: str, state: "SimulationState"):
        super().__init__(message)
        self.state = state


@dataclass(frozen=True)
class SolverConfig:
    L_max: int = 64
    dt: float = 1e-3
    t_end: float = 1.0
    alpha: float = 1.0
    nu: float = 0.0
    dealias_fraction: float = 2.0 / 3.0
    sample_every: int = 10
    seed: int = 0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ConfigError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if not (isinstance(self.L_max, (int, np.integer)) and 2 <= self.L_max <= 2048):
            out.append(f"L_max must be an integer in [2, 2048] (got {self.L_max!r})")
        if not self.dt > 0:
            out.append(f"dt > 0 (got {self.dt!r})")
        if not self.t_end >= 0:
            out.append(f"t_end >= 0 (got {self.t_end!r})")
        if not 0 < self.alpha <= 2:
            out.append(f"alpha in (0, 2] (got {self.alpha!r})")
        if not self.nu >= 0:
            out.append(f"nu >= 0 (got {self.nu!r})")
        if not 0.5 < self.dealias_fraction <= 1:
            out.append(f"dealias_fraction in (0.5, 1] (got {self.dealias_fraction!r})")
        if not (isinstance(self.sample_every, (int, np.integer)) and self.sample_every >= 1):
            out.append(f"sample_every must be a positive integer (got {self.sample_every!r})")
        if not isinstance(self.seed, (int, np.integer)):
            out.append(f"seed must be an integer (got {self.seed!r})")
        return out

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @property
    def dealias_degree(self) -> int:
        return int(math.floor(self.dealias_fraction * self.L_max + 1e-9))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def linear_symbol(self, L_max: int | None = None) -> np.ndarray:
        """``(l(l+1))^(alpha/2) + nu l(l+1)`` on the coefficient layout."""
        L = self.L_max if L_max is None else L_max
        l = SpectralField.zeros(L).degrees.astype(float)
        lam = l * (l + 1.0)
        return lam ** (0.5 * self.alpha) + self.nu * lam


@dataclass(frozen=True, eq=False)
class SimulationState:
    time: float
    theta: SpectralField
    step_index: int = 0


def compute_velocity(theta: SpectralField, grid=None) -> VelocityField:
    """``u = n x grad Lambda^{-1} theta`` at the nodes of ``grid``."""
    if abs(theta.coeffs[0]) > 1e-10 * max(1.0, theta.norm()):
        raise ValueError("velocity needs a mean-zero field")
    t = theta.copy()
    t.coeffs[0] = 0.0
    return perp_gradient(lambda_power(t, -1.0), grid)


def _dealias(a: SpectralField, keep: int) -> SpectralField:
    out = a.low_pass(keep)
    out.coeffs[0] = 0.0
    return out


def _advection(theta: SpectralField, keep: int) -> tuple[SpectralField, float]:
    th = _dealias(theta, keep)
    grid = build_grid(theta.L_max)
    u = compute_velocity(th, grid)
    g = surface_gradient(th, grid)
    prod = u.u_colat * g.u_colat + u.u_lon * g.u_lon
    return _dealias(analyze(PhysicalField(grid, prod)), keep), float(np.max(u.magnitude()))


def nonlinear_term(theta: SpectralField, dealias_fraction: float = 2.0 / 3.0) -> SpectralField:
    """Dealiased coefficients of ``u . grad theta``.

    Modes above ``floor(dealias_fraction * L_max)`` are removed before and
    after the product, so the retained modes are computed without aliasing.
    """
    keep = int(math.floor(dealias_fraction * theta.L_max + 1e-9))
    return _advection(theta, keep)[0]


def step(s: SimulationState, c: SolverConfig) -> SimulationState:
    """Advance one step of integrating-factor Heun.

    With ``E = exp(-lambda dt)`` and ``N = -u . grad theta``::

        theta_1   = E (theta + dt N(theta))
        theta_new = E theta + dt/2 (E N(theta) + N(theta_1))

    The update is exact when ``N`` vanishes.  Raises :class:`CFLError` when
    ``dt max|u| L_max`` exceeds the limit.
    """
    theta = s.theta
    if theta.L_max != c.L_max:
        raise ConfigError(f"state degree {theta.L_max} does not match L_max={c.L_max}")
    keep = c.dealias_degree
    E = np.exp(-c.linear_symbol() * c.dt)
    adv0, umax = _advection(theta, keep)
    cfl = c.dt * umax * c.L_max
    if cfl > CFL_LIMIT:
        raise CFLError(f"CFL number {cfl:.3g} exceeds {CFL_LIMIT} at t={s.time:.6g}", s)
    n0 = -adv0.coeffs
    a1 = E * (theta.coeffs + c.dt * n0)
    adv1, _ = _advection(SpectralField(c.L_max, a1), keep)
    new = E * theta.coeffs + 0.5 * c.dt * (E * n0 - adv1.coeffs)
    new[0] = 0.0
    return SimulationState(s.time + c.dt, SpectralField(c.L_max, new), s.step_index + 1)


Sink = Callable[[SimulationState], None]


def run(ic: "InitialCondition", c: SolverConfig, sinks: Iterable[Sink] = ()) -> SimulationState:
    """Integrate from ``ic`` to ``c.t_end``.

    Every sink is called with the initial state, every ``sample_every`` steps
    and with the final state.
    """
    sinks = list(sinks)
    state = SimulationState(0.0, ic.build(c.L_max, c.seed), 0)
    for sink in sinks:
        sink(state)
    n = c.n_steps
    for i in range(1, n + 1):
        state = step(state, c)
        # avoid drift of t from repeated addition
        state = SimulationState(i * c.dt, state.theta, i)
        if i % c.sample_every == 0 or i == n:
            for sink in sinks:
                sink(state)
    return state


@dataclass(frozen=True)
class InitialCondition:
    """Smooth mean-zero initial data.

    kinds: ``zonal`` (params ``l, amplitude``), ``random`` (``l_lo, l_hi,
    amplitude, seed``; ``amplitude`` is the peak value) and ``pair`` (two
    opposite-signed Gaussian bumps on the equator, ``separation, width,
    amplitude``).
    """

    kind: str
    params: tuple = field(default_factory=tuple)

    @classmethod
    def zonal(cls, l: int, amplitude: float = 1.0) -> "InitialCondition":
        return cls("zonal", (int(l), float(amplitude)))

    @classmethod
    def random_band(cls, l_lo: int, l_hi: int, amplitude: float = 1.0, seed: int | None = None):
        return cls("random", (int(l_lo), int(l_hi), float(amplitude), seed))

    @classmethod
    def gaussian_pair(cls, separation: float, width: float, amplitude: float = 1.0):
        return cls("pair", (float(separation), float(width), float(amplitude)))

    @classmethod
    def parse(cls, text: str) -> "InitialCondition":
        """Parse ``zonal:L[:amp]``, ``random:lo:hi[:amp[:seed]]`` or ``pair:sep:width[:amp]``."""
        kind, *args = text.strip().split(":")
        try:
            if kind == "zonal" and 1 <= len(args) <= 2:
                return cls.zonal(int(args[0]), *map(float, args[1:]))
            if kind == "random" and 2 <= len(args) <= 4:
                amp = float(args[2]) if len(args) > 2 else 1.0
                seed = int(args[3]) if len(args) > 3 else None
                return cls.random_band(int(args[0]), int(args[1]), amp, seed)
            if kind == "pair" and 2 <= len(args) <= 3:
                return cls.gaussian_pair(*map(float, args))
        except ValueError as exc:
            raise ValueError(f"bad initial condition {text!r}: {exc}") from None
        raise ValueError(
            f"bad initial condition {text!r}; expected zonal:L[:amp], random:lo:hi[:amp[:seed]] or pair:sep:width[:amp]"
        )

    def __str__(self):
        return ":".join([self.kind, *("" if p is None else str(p) for p in self.params)]).rstrip(":")

    def build(self, L_max: int, seed: int = 0) -> SpectralField:
        """The initial field, truncated at degree ``L_max``; ``seed`` is used when none is set."""
        if self.kind == "zonal":
            l, amp = self.params
            if not 1 <= l <= L_max:
                raise ValueError(f"zonal degree must lie in [1, L_max={L_max}], got {l}")
            return SpectralField.harmonic(L_max, l, 0, amplitude=amp)
        if self.kind == "random":
            lo, hi, amp, own_seed = self.params
            if not 1 <= lo <= hi <= L_max:
                raise ValueError(f"need 1 <= l_lo <= l_hi <= L_max={L_max}, got {lo}, {hi}")
            rng = np.random.default_rng(seed if own_seed is None else own_seed)
            f = SpectralField.random(hi, rng, lo, hi)
            peak = sup_norm(f)
            return (f * (amp / peak)).resized(L_max)
        if self.kind == "pair":
            sep, width, amp = self.params
            if not (0 < sep <= np.pi and width > 0):
                raise ValueError("pair needs 0 < separation <= pi and width > 0")
            grid = build_grid(L_max)
            pts = grid.unit_vectors()
            c1 = UnitVector.from_angles(np.pi / 2, -sep / 2).as_array()
            c2 = UnitVector.from_angles(np.pi / 2, sep / 2).as_array()
            bump = lambda c: np.exp(-(geodesic_distances(pts, c) ** 2) / (2 * width**2))
            f = analyze(PhysicalField(grid, amp * (bump(c1) - bump(c2))))
            f.coeffs[0] = 0.0
            return f
        raise ValueError(f"unknown initial condition kind {self.kind!r}")


def with_overrides(c: SolverConfig, **kw) -> SolverConfig:
    """Copy of ``c`` with the given fields replaced (invariants re-checked)."""
    return replace(c, **kw)
