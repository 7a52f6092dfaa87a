"""Fractional powers of the Laplace-Beltrami operator on the unit sphere.

``Lambda^alpha = (-Laplacian)^(alpha/2)`` is available three ways:

* :func:`lambda_power` -- the spectral multiplier ``(l(l+1))^(alpha/2)``;
* :func:`lambda_semigroup` -- heat-semigroup subordination,
  ``int_0^inf t^(-1-alpha/2) (f(x) - e^{t Laplacian} f(x)) dt`` times a
  calibrated constant;
* :func:`lambda_singular` -- a principal-value singular integral against
  ``d(x, y)^(-2-alpha)`` on geodesic polar coordinates around ``x``.

Two kernels are provided for the singular integral.  ``"leading"`` keeps only
the diagonal term, ``c chi(d) / d^(2+alpha)``, with a calibrated constant.
``"conformal"`` multiplies it by the smooth factor
``u0 = (d / chord)^(2+alpha)`` (``u0 = 1`` on the diagonal), keeps the
smooth far field, and adds the zeroth-order term
``Gamma(1+alpha/2) / Gamma(1-alpha/2) f(x)``.  This is the conformally
covariant fractional operator, whose symbol differs from
``(l(l+1))^(alpha/2)`` by ``O(l^(alpha-2))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import gamma, gammaln, roots_legendre

from .geometry import UnitVector, tangent_frame
from .transform import (
    Grid,
    PhysicalField,
    SpectralField,
    angular_momentum,
    analyze,
    build_grid,
    evaluate_many,
    sup_norm,
    synthesize,
)

__all__ = [
    "UncalibratedQuadratureError",
    "PrincipalValueResolutionError",
    "ProbeError",
    "lambda_power",
    "SemigroupQuadrature",
    "calibrate_semigroup",
    "lambda_semigroup",
    "c_alpha_constant",
    "zeroth_order_constant",
    "conformal_symbol",
    "SingularKernel",
    "singular_kernel",
    "calibrate_c_alpha",
    "lambda_singular",
    "singular_breakdown",
    "dirichlet_D",
    "CommutatorProbe",
    "commutator_apply",
    "smoothstep_cutoff",
    "multiply",
]


class UncalibratedQuadratureError(ValueError):
    """The semigroup quadrature has no calibration for the requested order."""


class PrincipalValueResolutionError(ValueError):
    """The principal-value exclusion radius is too coarse for the field."""


class ProbeError(ValueError):
    """The commutator multiplier is not flat at the probe point."""


def _as_array(x) -> np.ndarray:
    return x.as_array() if isinstance(x, UnitVector) else np.asarray(x, dtype=float)


def _check_alpha(alpha, lo=0.0, hi=2.0):
    if not lo < alpha < hi:
        raise ValueError(f"alpha must lie in ({lo}, {hi}), got {alpha!r}")


# spectral path ------------------------------------------------------------


def lambda_power(a: SpectralField, s: float) -> SpectralField:
    """Apply ``(-Laplacian)^(s/2)``: multiplies ``a_lm`` by ``(l(l+1))^(s/2)``.

    Negative powers need a mean-zero field.
    """
    if not -2.0 <= s <= 2.0:
        raise ValueError(f"power must lie in [-2, 2], got {s!r}")
    if s == 0:
        return a.copy()
    if s < 0 and abs(a.coeffs[0]) > 1e-12 * max(1.0, a.norm()):
        raise ValueError("negative power of the Laplacian needs a mean-zero field")
    lam = a.degrees * (a.degrees + 1.0)
    mult = np.zeros_like(lam)
    nz = lam > 0
    mult[nz] = lam[nz] ** (0.5 * s)
    return SpectralField(a.L_max, a.coeffs * mult)


# semigroup path -----------------------------------------------------------


@dataclass(frozen=True)
class SemigroupQuadrature:
    """Quadrature for ``int_0^inf t^(-1-alpha/2) (1 - e^{-lambda t}) dt``.

    ``[t_min, 1]`` is covered by Gauss-Legendre nodes in ``log t`` with the
    ``O(t)`` behaviour below ``t_min`` added analytically; ``[1, t_max]`` uses
    Gauss-Legendre in ``t`` against the ``e^{-2t}`` spectral gap, and the
    ``f(x)`` part of the tail is integrated exactly.
    """

    t_min: float = 1e-10
    t_max: float = 60.0
    n_log_nodes: int = 160
    n_tail_nodes: int = 160
    alpha: float | None = None
    calibration_constant: float | None = None

    def __post_init__(self):
        if not 0 < self.t_min < 1 < self.t_max:
            raise ValueError("need 0 < t_min < 1 < t_max")

    def raw_integral(self, lam, alpha: float) -> np.ndarray:
        """Uncalibrated ``int t^(-1-alpha/2) (1 - e^{-lam t}) dt`` per eigenvalue."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        h = 0.5 * alpha
        xs, ws = roots_legendre(self.n_log_nodes)
        a, b = np.log(self.t_min), 0.0
        s = 0.5 * (b - a) * xs + 0.5 * (a + b)
        ws = 0.5 * (b - a) * ws
        t = np.exp(s)
        head = np.sum(ws[None, :] * t[None, :] ** (-h) * -np.expm1(-lam[:, None] * t[None, :]), axis=1)
        # below t_min: 1 - e^{-lam t} ~ lam t - (lam t)^2 / 2
        head += lam * self.t_min ** (1 - h) / (1 - h) - 0.5 * lam**2 * self.t_min ** (2 - h) / (2 - h)
        xt, wt = roots_legendre(self.n_tail_nodes)
        tt = 0.5 * (self.t_max - 1.0) * xt + 0.5 * (self.t_max + 1.0)
        wt = 0.5 * (self.t_max - 1.0) * wt
        tail = 1.0 / h - np.sum(wt[None, :] * tt[None, :] ** (-1 - h) * np.exp(-lam[:, None] * tt[None, :]), axis=1)
        out = head + tail
        out[lam == 0] = 0.0
        return out


def calibrate_semigroup(alpha: float, q: SemigroupQuadrature | None = None) -> SemigroupQuadrature:
    """Fix the subordination constant so that ``Y_10`` has eigenvalue ``2^(alpha/2)``."""
    _check_alpha(alpha)
    q = SemigroupQuadrature() if q is None else q
    raw = q.raw_integral([2.0], alpha)[0]
    return replace(q, alpha=float(alpha), calibration_constant=float(2.0 ** (0.5 * alpha) / raw))


def _degree_components(a: SpectralField, x: np.ndarray) -> np.ndarray:
    """``F_l(x) = sum_m a_lm Y_lm(x)`` for every degree ``l``."""
    comps = []
    for l in range(a.L_max + 1):
        mask = a.degrees == l
        comps.append(SpectralField(a.L_max, np.where(mask, a.coeffs, 0)))
    return evaluate_many(comps, x)


def lambda_semigroup(a: SpectralField, x, alpha: float, q: SemigroupQuadrature | None = None):
    """``Lambda^alpha f(x)`` by heat-semigroup subordination.

    ``x`` may be a :class:`UnitVector` or an array of unit vectors; the heat
    semigroup acts spectrally through ``e^{-l(l+1) t}``.
    """
    _check_alpha(alpha)
    if q is None:
        q = calibrate_semigroup(alpha)
    if q.calibration_constant is None:
        raise UncalibratedQuadratureError("calibrate the quadrature with calibrate_semigroup first")
    if q.alpha is not None and abs(q.alpha - alpha) > 1e-15:
        raise UncalibratedQuadratureError(f"quadrature calibrated for alpha={q.alpha}, not {alpha}")
    xa = _as_array(x)
    l = np.arange(a.L_max + 1)
    weights = q.calibration_constant * q.raw_integral(l * (l + 1.0), alpha)
    F = _degree_components(a, xa)
    out = np.tensordot(weights, F, axes=(0, 0))
    return float(out) if np.ndim(out) == 0 else out


# singular-integral path ---------------------------------------------------


def c_alpha_constant(alpha: float) -> float:
    """Flat-space normalization of ``(-Delta)^(alpha/2)`` in two dimensions.

    ``2^alpha Gamma(1 + alpha/2) / (pi |Gamma(-alpha/2)|)``; equals ``1/(2 pi)`` at ``alpha = 1``.
    """
    _check_alpha(alpha)
    return float(2.0**alpha * gamma(1 + 0.5 * alpha) / (np.pi * abs(gamma(-0.5 * alpha))))


def zeroth_order_constant(alpha: float) -> float:
    """``Gamma(1 + alpha/2) / Gamma(1 - alpha/2)``: the conformal operator's action on constants."""
    return float(gamma(1 + 0.5 * alpha) / gamma(1 - 0.5 * alpha))


def conformal_symbol(l, alpha: float) -> np.ndarray:
    """Eigenvalues ``Gamma(l+1+alpha/2) / Gamma(l+1-alpha/2)`` of the conformal kernel operator."""
    l = np.asarray(l, dtype=float)
    return np.exp(gammaln(l + 1 + 0.5 * alpha) - gammaln(l + 1 - 0.5 * alpha))


def smoothstep_cutoff(r, radius: float) -> np.ndarray:
    """C^2 cutoff: 1 on ``[0, radius/2]``, quintic smoothstep down to 0 at ``radius``."""
    t = np.clip((np.asarray(r, dtype=float) - 0.5 * radius) / (0.5 * radius), 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


@dataclass(frozen=True, eq=False)
class SingularKernel:
    """Kernel and quadrature for the principal-value representation.

    ``quad_grid`` fixes the resolution: its Gauss-Legendre nodes are mapped
    onto each radial panel and its longitudes give the azimuthal rule.
    """

    alpha: float
    cutoff_radius: float
    pv_epsilon: float
    c_alpha: float
    quad_grid: Grid
    variant: str = "conformal"
    c_alpha_seed: float = field(default=float("nan"))

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not 0 < self.pv_epsilon < 0.5 * self.cutoff_radius < 0.5 * self.cutoff_radius * 2 < np.pi / 2:
            raise ValueError(
                "need 0 < pv_epsilon < cutoff_radius/2 and cutoff_radius < pi/2, got "
                f"pv_epsilon={self.pv_epsilon}, cutoff_radius={self.cutoff_radius}"
            )
        if self.variant not in ("conformal", "leading"):
            raise ValueError(f"variant must be 'conformal' or 'leading', got {self.variant!r}")

    def kernel(self, r) -> np.ndarray:
        """Radial kernel without the constant: ``u0(r) / r^(2+alpha)``."""
        r = np.asarray(r, dtype=float)
        if self.variant == "conformal":
            return (2.0 * np.sin(0.5 * r)) ** (-2.0 - self.alpha)
        return r ** (-2.0 - self.alpha)

    def chi(self, r) -> np.ndarray:
        return smoothstep_cutoff(r, self.cutoff_radius)

    def ball_moment(self) -> float:
        """``int_{d < eps} K(d) (1 - cos d)/2 dvol``: weight of ``-Laplacian f(x)`` in the ball."""
        a, eps = self.alpha, self.pv_epsilon
        if self.variant == "conformal":
            u = 1.0 - np.cos(eps)
            return float(2 * np.pi * 2.0 ** (-2 - 0.5 * a) * u ** (1 - 0.5 * a) / (1 - 0.5 * a))
        return float(0.5 * np.pi * eps ** (2 - a) / (2 - a))

    def radial_rule(self, far: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nodes, weights and cutoff weights of the radial rule.

        Panels: ``[eps, R/2]`` in ``log r``, ``[R/2, R]`` in ``r`` and, for the
        far field, ``[R/2, pi]``.  Returns ``(r, w, chi)`` where the
        near-field integrand is weighted by ``chi`` and the far field by
        ``1 - chi``.
        """
        n = self.quad_grid.n_lat
        x, w = roots_legendre(n)
        R, eps = self.cutoff_radius, self.pv_epsilon
        a, b = np.log(eps), np.log(0.5 * R)
        s = 0.5 * (b - a) * x + 0.5 * (a + b)
        r1 = np.exp(s)
        w1 = 0.5 * (b - a) * w * r1
        r2 = 0.25 * R * x + 0.75 * R
        w2 = 0.25 * R * w
        parts_r, parts_w = [r1, r2], [w1, w2]
        if far:
            r3 = 0.5 * (np.pi - R) * x + 0.5 * (np.pi + R)
            w3 = 0.5 * (np.pi - R) * w
            parts_r.append(r3)
            parts_w.append(w3)
        r = np.concatenate(parts_r)
        wts = np.concatenate(parts_w)
        return r, wts, self.chi(r)


def singular_kernel(
    alpha: float,
    quad_L: int = 128,
    cutoff_radius: float = np.pi / 4,
    pv_epsilon: float | None = None,
    variant: str = "conformal",
) -> SingularKernel:
    """Build a :class:`SingularKernel`.

    ``pv_epsilon`` defaults to ``2 / quad_L`` so that refining the quadrature
    also shrinks the principal-value exclusion ball.  The conformal variant
    uses the closed-form constant; the leading variant is calibrated on
    ``Y_10``.
    """
    _check_alpha(alpha)
    eps = 2.0 / quad_L if pv_epsilon is None else pv_epsilon
    seed = c_alpha_constant(alpha)
    k = SingularKernel(alpha, cutoff_radius, eps, seed, build_grid(quad_L), variant, seed)
    if variant == "leading":
        k = replace(k, c_alpha=calibrate_c_alpha(k))
    return k


def _polar_points(x: np.ndarray, r: np.ndarray, n_phi: int) -> np.ndarray:
    e1, e2 = tangent_frame(x)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    dirs = np.cos(phi)[:, None] * e1[None, :] + np.sin(phi)[:, None] * e2[None, :]
    return np.cos(r)[:, None, None] * x[None, None, :] + np.sin(r)[:, None, None] * dirs[None, :, :]


def _check_pv_resolution(L_max: int, k: SingularKernel):
    if k.pv_epsilon * L_max > 1.0:
        raise PrincipalValueResolutionError(
            f"pv_epsilon * L_max = {k.pv_epsilon * L_max:.3g} > 1; refine the quadrature or low-pass the field"
        )


def _ring_means(values: np.ndarray) -> np.ndarray:
    return values.mean(axis=-1)


def singular_breakdown(a: SpectralField, x, k: SingularKernel) -> dict:
    """Pieces of the singular-integral evaluation at a single point.

    Keys: ``near`` (cut-off principal-value integral outside the ball),
    ``ball`` (second-order Taylor compensation inside it), ``far`` (smooth
    far field, conformal only), ``local`` (zeroth-order term, conformal
    only) and ``total``; all already multiplied by ``c_alpha``.
    """
    _check_pv_resolution(a.L_max, k)
    xa = _as_array(x)
    conformal = k.variant == "conformal"
    r, w, chi = k.radial_rule(far=conformal)
    pts = _polar_points(xa, r, k.quad_grid.n_lon)
    mlap = a.multiply_by_degree(lambda l: l * (l + 1.0))
    fy = evaluate_many([a], pts)[0]
    fx, mlap_x = evaluate_many([a, mlap], xa)
    ring = fx - _ring_means(fy)
    radial = w * k.kernel(r) * np.sin(r) * 2 * np.pi * ring
    near = k.c_alpha * float(np.sum(chi * radial))
    far = k.c_alpha * float(np.sum((1.0 - chi) * radial)) if conformal else 0.0
    ball = k.c_alpha * float(mlap_x) * k.ball_moment()
    local = zeroth_order_constant(k.alpha) * float(fx) if conformal else 0.0
    return {"near": near, "ball": ball, "far": far, "local": local, "total": near + ball + far + local}


def lambda_singular(a: SpectralField, x, k: SingularKernel):
    """``Lambda^alpha f(x)`` from the principal-value integral representation.

    Accepts a single point or an array of points.
    """
    xa = _as_array(x)
    if xa.ndim == 1:
        return singular_breakdown(a, xa, k)["total"]
    flat = xa.reshape(-1, 3)
    out = np.array([singular_breakdown(a, p, k)["total"] for p in flat])
    return out.reshape(xa.shape[:-1])


def calibrate_c_alpha(k: SingularKernel) -> float:
    """Constant that makes the singular path reproduce ``Y_10``'s eigenvalue ``2^(alpha/2)``.

    For the conformal kernel the zeroth-order term is held fixed and only the
    integral part is rescaled.
    """
    y10 = SpectralField.harmonic(1, 1, 0)
    pole = np.array([0.0, 0.0, 1.0])
    unit = replace(k, c_alpha=1.0)
    parts = singular_breakdown(y10, pole, unit)
    fx = float(evaluate_many([y10], pole)[0])
    target = 2.0 ** (0.5 * k.alpha) * fx
    integral = parts["near"] + parts["ball"] + parts["far"]
    return float((target - parts["local"]) / integral)


def _gradient_fields(a: SpectralField) -> list[SpectralField]:
    return [angular_momentum(a, i) for i in (1, 2, 3)]


def dirichlet_D(a: SpectralField, x, k: SingularKernel) -> float:
    """``c P.V. int |grad f(x) - grad f(y)|^2 / d^(2+alpha) u0 chi dvol(y)``.

    Gradients are compared through the three rotation generators, which are
    global fields, so ``grad f(y)`` needs no parallel transport.  Inside the
    exclusion ball the integrand is replaced by its leading Taylor term
    ``sum_i |grad (R_i f)(x)|^2 d^2 / 2``.
    """
    _check_pv_resolution(a.L_max, k)
    xa = _as_array(x)
    r, w, chi = k.radial_rule(far=False)
    pts = _polar_points(xa, r, k.quad_grid.n_lon)
    grads = _gradient_fields(a)
    gy = evaluate_many(grads, pts)  # (3, nr, nphi)
    gx = evaluate_many(grads, xa)  # (3,)
    diff2 = np.sum((gy - gx[:, None, None]) ** 2, axis=0)
    radial = w * chi * k.kernel(r) * np.sin(r) * 2 * np.pi * _ring_means(diff2)
    second = [angular_momentum(g, j) for g in grads for j in (1, 2, 3)]
    hess2 = float(np.sum(evaluate_many(second, xa) ** 2))
    ball = hess2 * np.pi * k.pv_epsilon ** (2 - k.alpha) / (2 - k.alpha)
    return float(k.c_alpha * (np.sum(radial) + ball))


# commutator ---------------------------------------------------------------


def multiply(a: SpectralField, b: SpectralField) -> SpectralField:
    """Exact product of two band-limited fields (degree ``a.L_max + b.L_max``)."""
    L = max(a.L_max + b.L_max, 2)
    g = build_grid(L)
    prod = synthesize(a.resized(L), g).values * synthesize(b.resized(L), g).values
    return analyze(PhysicalField(g, prod))


def gradient_at(a: SpectralField, x) -> np.ndarray:
    """Components of ``grad f(x)`` along the three rotation generators."""
    return evaluate_many(_gradient_fields(a), _as_array(x))


@dataclass(frozen=True, eq=False)
class CommutatorProbe:
    """Multiplier ``a`` whose gradient vanishes at the probe point ``x0``."""

    a: SpectralField
    x0: UnitVector

    def __post_init__(self):
        g = float(np.linalg.norm(gradient_at(self.a, self.x0)))
        bound = 1e-8 * sup_norm(self.a)
        if g > bound:
            raise ProbeError(f"|grad a(x0)| = {g:.3g} exceeds 1e-8 ||a||_inf = {bound:.3g}")


def commutator_apply(p: CommutatorProbe, f: SpectralField, alpha: float) -> float:
    """``(Lambda^alpha (a f) - a Lambda^alpha f)(x0)``, spectrally with an exact product."""
    _check_alpha(alpha)
    x0 = p.x0.as_array()
    af = multiply(p.a, f)
    lam_af = lambda_power(af, alpha)
    lam_f = lambda_power(f, alpha)
    v_af, v_a, v_f = evaluate_many([lam_af, p.a, lam_f], x0)
    return float(v_af - v_a * v_f)
