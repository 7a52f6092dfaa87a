"""Heat kernel of the unit 2-sphere.

Two exact evaluations are available.  The eigenfunction series

    G(d, t) = sum_l (2l + 1) / (4 pi) exp(-l(l+1) t) P_l(cos d)

converges quickly for moderate and large ``t`` but loses everything to
cancellation once ``G`` falls below ~1e-15 of its diagonal value.  For small
``t`` the image-sum representation

    G(d, t) = sqrt(2) e^{t/4} / (4 pi t)^{3/2}
              * int_d^pi  h(phi, t) / sqrt(cos d - cos phi) dphi,
    h(phi, t) = sum_k (-1)^k (phi + 2 pi k) exp(-(phi + 2 pi k)^2 / (4 t))

is used instead; it is evaluated in log form so far-off-diagonal values stay
positive and representable.
"""

from __future__ import annotations

import numpy as np
from scipy.special import roots_legendre

__all__ = ["heat_kernel", "log_heat_kernel", "heat_kernel_distance", "series_truncation"]

SERIES_MIN_T = 0.2
_IMAGE_NODES = 256
_IMAGE_TERMS = 4


def series_truncation(t: float, L_min: int = 0, tol: float = 1e-17) -> int:
    """Smallest ``L >= L_min`` with ``(2L + 1) exp(-L(L+1) t) < tol``."""
    L = max(int(L_min), 1)
    while (2 * L + 1) * np.exp(-L * (L + 1.0) * t) >= tol:
        L += 1
    return L


def _legendre_sum(cosd, coeffs):
    # Clenshaw-free forward recurrence: sum_l coeffs[l] P_l(cosd)
    cosd = np.asarray(cosd, dtype=float)
    p0 = np.ones_like(cosd)
    total = coeffs[0] * p0
    if len(coeffs) == 1:
        return total
    p1 = cosd.copy()
    total = total + coeffs[1] * p1
    for l in range(2, len(coeffs)):
        p0, p1 = p1, ((2 * l - 1) * cosd * p1 - (l - 1) * p0) / l
        total = total + coeffs[l] * p1
    return total


def _series(d, t, L_max):
    L = series_truncation(t, L_max)
    l = np.arange(L + 1)
    c = (2 * l + 1) / (4 * np.pi) * np.exp(-l * (l + 1.0) * t)
    return _legendre_sum(np.cos(d), c)


_psi, _psi_w = roots_legendre(_IMAGE_NODES)
_psi = 0.5 * np.pi * (_psi + 1.0)
_psi_w = 0.5 * np.pi * _psi_w


def _log_images(d, t):
    # Substituting cos d - cos phi = (1 + cos d)(1 - cos psi)/2 removes both
    # endpoint square-root singularities; the integral becomes
    # int_0^pi h(phi) / sqrt(1 - cos d + u) dpsi.
    d = np.atleast_1d(np.asarray(d, dtype=float))
    out = np.empty(d.shape)
    k = np.arange(-_IMAGE_TERMS, _IMAGE_TERMS + 1)
    sgn = np.where(k % 2 == 0, 1.0, -1.0)
    for i, di in np.ndenumerate(d):
        c = np.cos(di)
        u = 0.5 * (1.0 + c) * (1.0 - np.cos(_psi))
        phi = np.arccos(np.clip(c - u, -1.0, 1.0))
        p = phi[:, None] + 2 * np.pi * k[None, :]
        # scale out exp(-d^2 / 4t) so the dominant image is O(1)
        h = np.sum(sgn * p * np.exp(-(p * p - di * di) / (4 * t)), axis=1)
        integral = np.sum(_psi_w * h / np.sqrt(1.0 - c + u))
        out[i] = (
            0.5 * np.log(2.0) + t / 4 - 1.5 * np.log(4 * np.pi * t) - di * di / (4 * t) + np.log(integral)
        )
    return out


def heat_kernel_distance(d, t: float, L_max: int = 0, method: str = "auto"):
    """``G`` as a function of geodesic distance ``d`` (scalar or array)."""
    if not t > 0:
        raise ValueError(f"heat kernel needs t > 0, got {t!r}")
    d = np.asarray(d, dtype=float)
    if method == "auto":
        method = "series" if t >= SERIES_MIN_T else "images"
    if method == "series":
        out = _series(d, t, L_max)
    elif method == "images":
        out = np.exp(_log_images(d, t)).reshape(d.shape)
    else:
        raise ValueError(f"unknown method {method!r}")
    return out if out.ndim else float(out)


def log_heat_kernel(d, t: float, L_max: int = 0):
    """``log G(d, t)``; stays finite where ``G`` itself underflows."""
    if not t > 0:
        raise ValueError(f"heat kernel needs t > 0, got {t!r}")
    d = np.asarray(d, dtype=float)
    if t >= SERIES_MIN_T:
        out = np.log(_series(d, t, L_max))
    else:
        out = _log_images(d, t).reshape(d.shape)
    return out if out.ndim else float(out)


def heat_kernel(x, y, t: float, L_max: int = 0, method: str = "auto") -> float:
    """Heat kernel ``G(x, y, t)`` between two points of the unit sphere.

    ``L_max`` is a lower bound on the series truncation; it is extended until
    the neglected terms are below 1e-17.
    """
    xa = x.as_array() if hasattr(x, "as_array") else np.asarray(x, float)
    ya = y.as_array() if hasattr(y, "as_array") else np.asarray(y, float)
    d = np.arccos(np.clip(np.dot(xa, ya), -1.0, 1.0))
    return float(heat_kernel_distance(d, t, L_max, method))
