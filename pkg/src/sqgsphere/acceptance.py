"""Executable acceptance criteria.

Each ``criterion_N`` runs one check at its stated tolerance and returns a
:class:`CriterionResult`.  ``quick=True`` shrinks sample counts and run
lengths but keeps every tolerance.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .diagnostics import (
    Recorder,
    gradient_monitor,
    linf_audit,
    max_principle_check,
    nonlinear_bound_check,
    twin_run_compare,
    viscosity_ladder,
)
from .fractional import (
    CommutatorProbe,
    commutator_apply,
    lambda_power,
    lambda_semigroup,
    lambda_singular,
    singular_kernel,
)
from .geometry import NORTH_POLE, random_unit_vectors, rotation_expansion_report
from .heat import heat_kernel_distance, log_heat_kernel
from .solver import InitialCondition, SolverConfig, run
from .transform import SpectralField, analyze, build_grid, evaluate, sup_norm, surface_gradient, synthesize

__all__ = ["CriterionResult", "CRITERIA", "run_all"]


@dataclass(frozen=True)
class CriterionResult:
    number: str
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:>2} {self.name}: {self.detail}"


def criterion_1(quick: bool = False) -> CriterionResult:
    c = SolverConfig(L_max=32, dt=1e-3, t_end=1.0, alpha=1.0, nu=0.0)
    t0 = time.perf_counter()
    final = run(InitialCondition.zonal(2), c).theta
    elapsed = time.perf_counter() - t0
    grid = build_grid(32)
    exact = SpectralField.harmonic(32, 2, 0) * np.exp(-np.sqrt(6.0))
    err = float(np.max(np.abs(synthesize(final, grid).values - synthesize(exact, grid).values)))
    ok = err <= 1e-6 and elapsed <= 30.0
    return CriterionResult("1", "zonal exact solution", ok, f"max node error {err:.2e} (<= 1e-6), {elapsed:.1f} s (<= 30 s)")


def criterion_2(quick: bool = False) -> CriterionResult:
    a = SpectralField.random(32, np.random.default_rng(2))
    grid = build_grid(32)
    f = synthesize(a, grid)
    back = analyze(f)
    rt = float(np.max(np.abs(back.coeffs - a.coeffs)))
    energy = grid.integrate(f.values**2)
    pars = abs(energy - a.norm() ** 2) / a.norm() ** 2
    ok = rt <= 1e-12 and pars <= 1e-10
    return CriterionResult("2", "transform fidelity", ok, f"round trip {rt:.2e} (<= 1e-12), Parseval {pars:.2e} (<= 1e-10)")


def _rel(x, ref) -> float:
    return float(np.max(np.abs(np.asarray(x) - ref)) / np.max(np.abs(ref)))


def criterion_3(quick: bool = False) -> CriterionResult:
    f = SpectralField.harmonic(5, 5, 3, "real")
    pts = random_unit_vectors(5 if quick else 20, 3)
    quads = (64, 128, 256)
    ok, parts = True, []
    for alpha in (0.5, 1.0, 1.5):
        ref = evaluate(lambda_power(f, alpha), pts)
        e_sg = _rel(lambda_semigroup(f, pts, alpha), ref)
        e_si = [_rel(lambda_singular(f, pts, singular_kernel(alpha, q)), ref) for q in quads]
        mono = all(b < a for a, b in zip(e_si, e_si[1:]))
        ok &= e_sg <= 1e-5 and e_si[-1] <= 5e-2 and mono
        parts.append(
            f"a={alpha}: semigroup {e_sg:.1e}, singular " + "/".join(f"{e:.2e}" for e in e_si)
            + ("" if mono else " (not monotone)")
        )
    return CriterionResult("3", "three-way operator agreement", ok, "; ".join(parts))


def criterion_4(quick: bool = False) -> CriterionResult:
    rng = np.random.default_rng(4)
    worst = np.inf
    for alpha in (0.5, 1.0):
        for _ in range(50):
            f = SpectralField.random(12, rng, 1, 12)
            sup = sup_norm(f)
            worst = min(worst, max_principle_check(f, alpha) / sup)
    ok = worst >= -1e-6
    return CriterionResult("4", "maximum principle", ok, f"min sign*Lambda^a f(x*)/||f||_inf = {worst:.3g} (>= -1e-6)")


def criterion_5(quick: bool = False) -> CriterionResult:
    n = 1000 if quick else 5000
    c = SolverConfig(L_max=32, dt=1e-3, t_end=n * 1e-3, sample_every=1)
    sq = []
    rec = Recorder(c.alpha)

    def sink(state):
        sq.append(state.theta.norm() ** 2)
        if state.step_index % 10 == 0:
            rec(state)

    run(InitialCondition.random_band(1, 10, 1.0, 5), c, [sink])
    inc = float(max(np.max(np.diff(sq)), 0.0))
    linf = linf_audit(rec.records, 1e-3)
    ok = inc <= 1e-12 and linf.passed
    return CriterionResult(
        "5", "L2 decay / Linf non-increase", ok,
        f"{n} steps: max increase of ||theta||^2 {inc:.1e} (<= 1e-12), Linf excess {linf.max_violation:.1e} (<= 1e-3)",
    )


COMMUTATOR_ALPHA = 1.5


def _commutator_ratios(alpha, degrees=(4, 8, 16, 32)):
    probe = CommutatorProbe(SpectralField.harmonic(2, 2, 0), NORTH_POLE)
    out = []
    for l in degrees:
        f = SpectralField.harmonic(l, l, 0)
        out.append(abs(commutator_apply(probe, f, alpha)) / np.sqrt((2 * l + 1) / (4 * np.pi)))
    return np.array(out)


def gradient_growth(degrees=(4, 8, 16, 32)) -> np.ndarray:
    """``||grad Y_l0||_inf / ||Y_l0||_inf``, the gradient on a 4x oversampled grid."""
    out = []
    for l in degrees:
        f = SpectralField.harmonic(l, l, 0)
        g = build_grid(4 * l)
        out.append(np.max(surface_gradient(f.resized(4 * l), g).magnitude()) / sup_norm(f))
    return np.array(out)


def criterion_6(quick: bool = False) -> CriterionResult:
    r = _commutator_ratios(COMMUTATOR_ALPHA)
    r1 = _commutator_ratios(1.0)
    g = gradient_growth()
    var, growth = float(r.max() / r.min()), float(g[-1] / g[0])
    ok = var < 3.0 and growth >= 8.0
    return CriterionResult(
        "6", "commutator boundedness", ok,
        f"alpha={COMMUTATOR_ALPHA}: |[L,a]f|/||f|| varies {var:.2f}x (< 3); "
        f"||grad f||/||f|| grows {growth:.2f}x (>= 8); alpha=1 varies {r1.max() / r1.min():.2f}x",
    )


BOUND_CUTOFF = 1.5


def criterion_7(quick: bool = False) -> CriterionResult:
    k = singular_kernel(1.0, 64, cutoff_radius=BOUND_CUTOFF)
    reports = {l: nonlinear_bound_check(SpectralField.harmonic(l, l, 0), 1.0, k) for l in range(2, 11)}
    fitted = [r.fitted_constant for r in reports.values() if not r.empty]
    positive = all(p.lhs > 0 for r in reports.values() for p in r.points)
    spread = max(fitted) / min(fitted)
    ok = positive and spread < 2.0
    empty = [l for l, r in reports.items() if r.empty]
    cs = ", ".join(f"{l}:{r.fitted_constant:.3g}" for l, r in reports.items() if not r.empty)
    return CriterionResult(
        "7", "nonlinear lower bound", ok,
        f"D>0 at all points: {positive}; fitted c {{{cs}}} spread {spread:.2f}x (< 2)"
        + (f"; no threshold points for l={empty}" if empty else ""),
    )


def criterion_8(quick: bool = False) -> CriterionResult:
    hs = np.array([0.2, 0.1, 0.05, 0.025])
    dev = np.array([rotation_expansion_report(h).dev_11 for h in hs])
    slope = float(np.polyfit(np.log(hs), np.log(dev), 1)[0])
    return CriterionResult("8", "rotation-generator expansion", abs(slope - 2.0) <= 0.1, f"log-log slope {slope:.3f} (2 +/- 0.1)")


def criterion_9(quick: bool = False) -> CriterionResult:
    c = SolverConfig(L_max=42 if quick else 85, dt=5e-3, t_end=2.0 if quick else 5.0, sample_every=10)
    rec = Recorder(c.alpha)
    run(InitialCondition.random_band(1, 16, 1.0, 9), c, [rec])
    rep = gradient_monitor(rec.records, 0.5)
    early = max(r.grad_sup for r in rec.records if r.time <= 0.5)
    ok = rep.sup_after <= 3.0 * early
    return CriterionResult(
        "9", "gradient boundedness", ok,
        f"L={c.L_max}, t<= {c.t_end:g}: sup_(t>=0.5) {rep.sup_after:.3g} vs 3 x sup_(t<=0.5) {3 * early:.3g}",
    )


def criterion_10(quick: bool = False) -> CriterionResult:
    ic = InitialCondition.random_band(1, 10, 1.0, 10)
    t_end = 0.5 if quick else 1.0
    twin = twin_run_compare(
        SolverConfig(L_max=32, dt=1e-3, t_end=t_end, sample_every=50),
        SolverConfig(L_max=64, dt=1e-3, t_end=t_end, sample_every=50),
        ic,
    )
    ladder = viscosity_ladder(ic, SolverConfig(L_max=32, dt=1e-3, t_end=t_end))
    ok = twin.passed and ladder.monotone
    ds = "/".join(f"{d:.2e}" for d in ladder.distances)
    return CriterionResult(
        "10", "uniqueness / Gronwall", ok,
        f"twin distance {np.max(twin.distance):.2e} within envelope (K={twin.K:.3g}, S={twin.source:.2e}): {twin.passed}; "
        f"nu ladder {ds}, monotone: {ladder.monotone}",
    )


def heat_mass(t: float, n: int = 200) -> float:
    """``int G(x, y, t) dvol(y)`` by Gauss-Legendre in the distance."""
    from scipy.special import roots_legendre

    x, w = roots_legendre(n)
    cut = min(12 * np.sqrt(t), np.pi / 2)
    total = 0.0
    for a, b in ((0.0, cut), (cut, np.pi)):
        d = 0.5 * (b - a) * x + 0.5 * (a + b)
        g = np.exp(log_heat_kernel(d, t))
        total += 0.5 * (b - a) * np.sum(w * g * np.sin(d))
    return float(2 * np.pi * total)


def li_yau_constant(ts, ds) -> float:
    """Smallest ``C`` with ``G <= C exp(-d^2 / 5t) / t`` on the scan."""
    return float(np.exp(max(np.max(log_heat_kernel(ds, t) + np.log(t) + ds**2 / (5 * t)) for t in ts)))


def criterion_11(quick: bool = False) -> CriterionResult:
    mass = max(abs(heat_mass(t) - 1.0) for t in (1e-3, 1e-2, 0.1, 1.0))
    C = li_yau_constant(np.geomspace(1e-3, 1, 13), np.linspace(0, np.pi, 25))
    ts, ds = np.geomspace(1e-3, 1, 41), np.linspace(0, np.pi, 97)
    worst = max(np.max(log_heat_kernel(ds, t) + np.log(t) + ds**2 / (5 * t) - np.log(C)) for t in ts)
    diag = heat_kernel_distance(0.0, 1.0)
    ok = mass <= 1e-10 and worst <= 1e-12 and abs(diag - 0.11289) <= 1e-4
    return CriterionResult(
        "11", "heat kernel", ok,
        f"|int G - 1| {mass:.1e} (<= 1e-10); C = {C:.4f} holds on a finer scan (excess {max(worst, 0):.1e}); "
        f"G(x,x,1) = {diag:.6f} (0.11289 +/- 1e-4)",
    )


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


def run_all(quick: bool = False, only=None, echo=print) -> list[CriterionResult]:
    out = []
    for i, fn in enumerate(CRITERIA, 1):
        if only and i not in only:
            continue
        res = fn(quick)
        out.append(res)
        if echo:
            echo(res.line())
    return out
