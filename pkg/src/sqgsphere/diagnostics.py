"""Norms and a priori estimates monitored on static fields and along trajectories."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fractional import SingularKernel, dirichlet_D, lambda_power
from .geometry import UnitVector, random_unit_vectors
from .solver import InitialCondition, SimulationState, SolverConfig, nonlinear_term, run, with_overrides
from .transform import (
    SpectralField,
    build_grid,
    evaluate,
    evaluate_many,
    locate_extremum,
    sup_norm,
    surface_gradient,
    synthesize,
)

__all__ = [
    "H_NORM_ORDERS",
    "DiagnosticsRecord",
    "Recorder",
    "record",
    "sobolev_norm",
    "max_principle_check",
    "BoundCheckReport",
    "nonlinear_bound_check",
    "ModulusEstimate",
    "modulus_estimate",
    "L2DecayReport",
    "l2_decay_audit",
    "linf_audit",
    "GradientReport",
    "gradient_monitor",
    "H3Fit",
    "h3_inequality_fit",
    "TwinReport",
    "twin_run_compare",
    "viscosity_ladder",
]

H_NORM_ORDERS = (1.0, 1.5, 2.0, 3.0)


def sobolev_norm(a: SpectralField, s: float) -> float:
    """``(sum (l(l+1))^s |a_lm|^2)^(1/2)``."""
    lam = a.degrees * (a.degrees + 1.0)
    w = np.where(lam > 0, lam, 0.0) ** s
    return float(np.sqrt(np.sum(w * np.abs(a.coeffs) ** 2)))


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    l2: float
    linf: float
    grad_sup: float
    h_norms: dict
    maxpoint_lambda: float
    grad_argmax: UnitVector

    def row(self) -> list[float]:
        return [
            self.time,
            self.l2,
            self.linf,
            self.grad_sup,
            *(self.h_norms[s] for s in H_NORM_ORDERS),
            self.maxpoint_lambda,
        ]


def _oversampled_grid(L_max: int, oversample: int):
    return build_grid(max(int(oversample * L_max), 4))


def record(state: SimulationState, alpha: float, oversample: int = 2) -> DiagnosticsRecord:
    """Diagnostics of one state.

    ``linf`` and its location come from :func:`locate_extremum`;
    ``grad_sup`` is the node maximum on a grid of degree
    ``oversample * L_max``.
    """
    th = state.theta
    grid = _oversampled_grid(th.L_max, oversample)
    gmag = surface_gradient(th, grid).magnitude()
    pts = grid.unit_vectors()
    j = np.unravel_index(np.argmax(gmag), gmag.shape)
    v, x = locate_extremum(th, oversample)
    lam = evaluate(lambda_power(th, alpha), x) if v else 0.0
    return DiagnosticsRecord(
        time=float(state.time),
        l2=th.norm(),
        linf=abs(v),
        grad_sup=float(gmag[j]),
        h_norms={s: sobolev_norm(th, s) for s in H_NORM_ORDERS},
        maxpoint_lambda=float(np.sign(v) * lam),
        grad_argmax=UnitVector.from_array(pts[j]),
    )


@dataclass
class Recorder:
    """Solver sink that collects a :class:`DiagnosticsRecord` per sample."""

    alpha: float
    oversample: int = 2
    records: list = field(default_factory=list)
    states: list = field(default_factory=list)
    keep_states: bool = False

    def __call__(self, state: SimulationState):
        self.records.append(record(state, self.alpha, self.oversample))
        if self.keep_states:
            self.states.append(state)


def max_principle_check(theta: SpectralField, alpha: float, oversample: int = 4) -> float:
    """``sign(theta(x*)) Lambda^alpha theta(x*)`` at the extremum ``x*`` of ``|theta|``.

    Nonnegative at a true extremum; ``x*`` is located by
    :func:`locate_extremum` starting from a grid of degree
    ``oversample * L_max``.
    """
    if theta.norm() == 0:
        raise ValueError("maximum principle check needs a nontrivial field")
    v, x = locate_extremum(theta, oversample)
    return float(np.sign(v) * evaluate(lambda_power(theta, alpha), x))


# nonlinear lower bound ----------------------------------------------------


@dataclass(frozen=True)
class BoundPoint:
    x: UnitVector
    lhs: float
    rhs: float
    ratio: float


@dataclass(frozen=True)
class BoundCheckReport:
    """``lhs = D(x)`` against ``rhs = |grad f(x)|^(2+alpha) / ||f||_inf^alpha``.

    ``fitted_constant`` is the smallest ``c`` with ``lhs >= rhs / c`` at every
    recorded point; ``violations`` counts points with ``lhs <= 0``.
    """

    points: tuple
    fitted_constant: float
    violations: int
    threshold: float
    empty: bool

    def summary(self) -> str:
        if self.empty:
            return f"no point with |grad f| >= {self.threshold:g} ||f||_inf"
        return (
            f"{len(self.points)} points, fitted c = {self.fitted_constant:.4g}, "
            f"violations = {self.violations}"
        )


def nonlinear_bound_check(
    f: SpectralField,
    alpha: float,
    k: SingularKernel,
    threshold: float = 2.0,
    max_points: int = 6,
    oversample: int = 2,
) -> BoundCheckReport:
    """Check ``D(x) >= |grad f(x)|^(2+alpha) / (c ||f||_inf^alpha)`` at steep points.

    Candidates are grid nodes with ``|grad f| >= threshold ||f||_inf``; up to
    ``max_points`` of them, evenly spread in gradient size and including the
    steepest, are evaluated.
    """
    grid = _oversampled_grid(max(f.L_max, 8), oversample)
    gmag = surface_gradient(f.resized(grid.L_max), grid).magnitude()
    sup = sup_norm(f) if f.norm() else 0.0
    pts = grid.unit_vectors().reshape(-1, 3)
    gflat = gmag.reshape(-1)
    if sup == 0:
        return BoundCheckReport((), float("nan"), 0, threshold, True)
    cand = np.flatnonzero(gflat >= threshold * sup)
    if cand.size == 0:
        return BoundCheckReport((), float("nan"), 0, threshold, True)
    cand = cand[np.argsort(-gflat[cand], kind="stable")]
    pick = cand[np.unique(np.linspace(0, cand.size - 1, min(max_points, cand.size)).round().astype(int))]
    points = []
    for idx in pick:
        lhs = dirichlet_D(f, pts[idx], k)
        rhs = float(gflat[idx] ** (2 + alpha) / sup**alpha)
        points.append(BoundPoint(UnitVector.from_array(pts[idx]), lhs, rhs, rhs / lhs if lhs > 0 else np.inf))
    violations = sum(p.lhs <= 0 for p in points)
    fitted = max(p.ratio for p in points)
    return BoundCheckReport(tuple(points), float(fitted), int(violations), threshold, False)


# modulus of continuity ----------------------------------------------------


@dataclass(frozen=True)
class ModulusEstimate:
    rho_values: np.ndarray
    omega_values: np.ndarray
    raw_values: np.ndarray


def modulus_estimate(
    theta: SpectralField,
    rho_values,
    n_pairs: int = 10_000,
    window: float = 0.1,
    seed: int = 0,
) -> ModulusEstimate:
    """Monte Carlo ``sup |theta(x) - theta(y)|`` over pairs with ``d(x, y)`` within ``window * rho`` of ``rho``.

    Half of the base points are random; the other half sit at the extrema of
    ``theta`` on a fine grid, where the largest oscillations start.  The
    returned ``omega_values`` are the running maximum over increasing ``rho``.
    """
    rho = np.asarray(rho_values, dtype=float)
    if np.any((rho <= 0) | (rho >= np.pi + 1e-12)):
        raise ValueError("rho values must lie in (0, pi]")
    order = np.argsort(rho)
    rng = np.random.default_rng(seed)
    grid = _oversampled_grid(max(theta.L_max, 8), 2)
    vals = synthesize(theta.resized(grid.L_max), grid).values.reshape(-1)
    nodes = grid.unit_vectors().reshape(-1, 3)
    extrema = nodes[[np.argmax(vals), np.argmin(vals)]]
    raw = np.zeros(rho.size)
    for i, r in enumerate(rho):
        n_rand = n_pairs // 2
        base = np.concatenate([random_unit_vectors(n_rand, rng), np.repeat(extrema, n_pairs - n_rand, axis=0)[: n_pairs - n_rand]])
        d = rng.uniform((1 - window) * r, min((1 + window) * r, np.pi), size=base.shape[0])
        # random tangent direction at each base point
        v = rng.standard_normal(base.shape)
        v -= np.sum(v * base, axis=1, keepdims=True) * base
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        other = np.cos(d)[:, None] * base + np.sin(d)[:, None] * v
        fx, = evaluate_many([theta], base)
        fy, = evaluate_many([theta], other)
        raw[i] = float(np.max(np.abs(fx - fy)))
    env = np.empty_like(raw)
    env[order] = np.maximum.accumulate(raw[order])
    return ModulusEstimate(rho, env, raw)


# trajectory audits --------------------------------------------------------


@dataclass(frozen=True)
class L2DecayReport:
    max_violation: float
    passed: bool
    n_records: int


def l2_decay_audit(records, tol: float = 1e-12) -> L2DecayReport:
    """Largest increase of ``||theta||^2`` between consecutive records."""
    sq = np.array([r.l2 for r in records]) ** 2
    if sq.size < 2:
        return L2DecayReport(0.0, True, int(sq.size))
    worst = float(max(np.max(np.diff(sq)), 0.0))
    return L2DecayReport(worst, worst <= tol, int(sq.size))


def linf_audit(records, rel_tol: float = 1e-3) -> L2DecayReport:
    """Largest relative excess of ``max |theta(t)|`` over ``max |theta(0)|``."""
    m = np.array([r.linf for r in records])
    if m.size < 2:
        return L2DecayReport(0.0, True, int(m.size))
    worst = float(max(np.max(m[1:] / m[0] - 1.0), 0.0))
    return L2DecayReport(worst, worst <= rel_tol, int(m.size))


@dataclass(frozen=True)
class GradientReport:
    t0: float
    sup_before: float
    sup_after: float
    growth: float
    ratio_to_initial: float
    tail_sup: float
    no_blowup_trend: bool


def gradient_monitor(records, t0: float) -> GradientReport:
    """Sup of ``|grad theta|`` before and after ``t0``.

    ``ratio_to_initial`` compares the late sup with
    ``max(||theta_0||_inf, ||grad theta_0||_inf)``; ``no_blowup_trend`` asks
    that the last quarter of the window stays within 1.1 of the window sup.
    """
    t = np.array([r.time for r in records])
    g = np.array([r.grad_sup for r in records])
    before, after = g[t <= t0], g[t >= t0]
    if before.size == 0 or after.size == 0:
        raise ValueError(f"records do not straddle t0={t0}")
    tail = after[int(np.floor(0.75 * after.size)) :]
    if tail.size == 0:
        raise ValueError("empty tail window")
    sup_after = float(np.max(after))
    return GradientReport(
        t0=float(t0),
        sup_before=float(np.max(before)),
        sup_after=sup_after,
        growth=sup_after / float(np.max(before)),
        ratio_to_initial=sup_after / max(records[0].linf, records[0].grad_sup),
        tail_sup=float(np.max(tail)),
        no_blowup_trend=bool(np.max(tail) <= 1.1 * sup_after),
    )


@dataclass(frozen=True)
class H3Fit:
    constant: float
    first_half: float
    second_half: float
    stable: bool
    skipped: bool


def h3_inequality_fit(records) -> H3Fit:
    """Empirical ``C`` in ``d/dt ||theta||_{H^3}^2 <= C ||theta||_{H^3}^3``.

    Uses forward differences between consecutive records.
    """
    if len(records) < 3:
        raise ValueError("need at least 3 records")
    t = np.array([r.time for r in records])
    h = np.array([r.h_norms[3.0] for r in records])
    if np.all(h == 0):
        return H3Fit(float("nan"), float("nan"), float("nan"), True, True)
    rate = np.diff(h**2) / np.diff(t) / h[:-1] ** 3
    half = rate.size // 2
    first, second = float(np.max(rate[: max(half, 1)])), float(np.max(rate[half:]))
    stable = np.isfinite(rate).all() and (second <= 2 * first if first > 0 else second <= 0)
    return H3Fit(float(np.max(rate)), first, second, bool(stable), False)


# twin runs ----------------------------------------------------------------


@dataclass(frozen=True)
class TwinReport:
    times: np.ndarray
    distance: np.ndarray
    envelope: np.ndarray
    K: float
    source: float
    passed: bool


def _trajectory(ic, c):
    rec = Recorder(c.alpha, keep_states=True)
    run(ic, c, [rec])
    return rec


def _tendency(theta: SpectralField, c: SolverConfig) -> SpectralField:
    """``-u . grad theta - lambda theta`` as discretized by ``c``."""
    th = theta.resized(c.L_max) if theta.L_max <= c.L_max else theta.low_pass(c.L_max).resized(c.L_max)
    adv = nonlinear_term(th, c.dealias_fraction)
    return SpectralField(c.L_max, -adv.coeffs - c.linear_symbol() * th.coeffs)


def twin_run_compare(config_a: SolverConfig, config_b: SolverConfig, ic: InitialCondition) -> TwinReport:
    """L^2 distance between two runs from the same data, against a Gronwall envelope.

    Fields are compared after truncation to the smaller degree.  With ``K``
    the largest ``grad_sup`` of the finer run and ``S`` the largest
    difference between the two discretized tendencies evaluated on the finer
    trajectory, ``d' <= K d + S`` gives the envelope
    ``d(0) exp(K t) + S (exp(K t) - 1) / K``.
    """
    if config_a.seed != config_b.seed and ic.kind == "random" and ic.params[3] is None:
        raise ValueError("twin runs from random data need a common seed")
    if abs(config_a.t_end - config_b.t_end) > 1e-12:
        raise ValueError("twin runs need a common t_end")
    ra, rb = _trajectory(ic, config_a), _trajectory(ic, config_b)
    L = min(config_a.L_max, config_b.L_max)
    ta = {round(s.time, 9): s for s in ra.states}
    tb = {round(s.time, 9): s for s in rb.states}
    common = sorted(set(ta) & set(tb))
    if len(common) < 2:
        raise ValueError("twin runs share fewer than two sample times")
    dist = np.array([(ta[t].theta.resized(L) - tb[t].theta.resized(L)).norm() for t in common])
    fine_run, fine_states = (rb, tb) if config_b.L_max >= config_a.L_max else (ra, ta)
    K = max(r.grad_sup for r in fine_run.records)
    S = max(
        (_tendency(fine_states[t].theta, config_a).resized(max(config_a.L_max, L)).low_pass(L).resized(L)
         - _tendency(fine_states[t].theta, config_b).low_pass(L).resized(L)).norm()
        for t in common
    )
    times = np.array(common)
    roundoff = 1e-12 * max(ra.states[0].theta.norm(), 1e-300)
    grow = np.exp(K * times)
    env = dist[0] * grow + (S / K if K > 0 else 0.0) * (grow - 1.0) + roundoff
    return TwinReport(times, dist, env, float(K), float(S), bool(np.all(dist <= env)))


@dataclass(frozen=True)
class LadderReport:
    nus: tuple
    distances: tuple
    monotone: bool


def viscosity_ladder(ic: InitialCondition, base: SolverConfig, nus=(1e-2, 1e-3, 1e-4)) -> LadderReport:
    """L^2 distance at ``t_end`` between runs with viscosity ``nu`` and the inviscid run."""
    ref = run(ic, with_overrides(base, nu=0.0)).theta
    d = tuple(float((run(ic, with_overrides(base, nu=nu)).theta - ref).norm()) for nu in nus)
    order = np.argsort(nus)[::-1]
    seq = np.array(d)[order]
    return LadderReport(tuple(nus), d, bool(np.all(np.diff(seq) < 0)))
