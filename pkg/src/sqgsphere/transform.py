"""Spherical-harmonic analysis and synthesis on a Gauss-Legendre x equispaced grid.

Conventions
-----------
Colatitude ``theta`` in (0, pi), longitude ``phi`` in [0, 2 pi).  Harmonics are
the orthonormal complex ones with the Condon-Shortley phase::

    Y_lm(theta, phi) = P_lm(cos theta) exp(i m phi),   int |Y_lm|^2 dvol = 1

so that ``-Laplacian Y_lm = l(l+1) Y_lm`` and ``Y_l,-m = (-1)^m conj(Y_lm)``.
Coefficients of a real field satisfy ``a_l,-m = (-1)^m conj(a_lm)``.

Vector fields are stored by their components in the local orthonormal frame
``(e_colat, e_lon)``, ``e_lon`` pointing east.  The perpendicular gradient is
``n x grad f`` with ``n`` the outward normal.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import roots_legendre

__all__ = [
    "GridMismatchError",
    "Grid",
    "SpectralField",
    "PhysicalField",
    "VelocityField",
    "build_grid",
    "normalized_legendre",
    "analyze",
    "synthesize",
    "surface_gradient",
    "perp_gradient",
    "divergence",
    "angular_momentum",
    "laplacian",
    "evaluate",
    "evaluate_many",
    "lm_index",
    "locate_extremum",
    "sup_norm",
]

_RESCALE = 1e150
_LOG_RESCALE = np.log(_RESCALE)


class GridMismatchError(ValueError):
    """Raised when a field and a grid are incompatible."""


def lm_index(l, m):
    """Flat position of (l, m) in the l-ascending, m = -l..l coefficient layout."""
    return l * l + l + m


def _smooth_fft_size(n: int) -> int:
    # smallest even integer >= n whose only prime factors are 2, 3, 5
    k = n + (n % 2)
    while True:
        r = k
        for p in (2, 3, 5):
            while r % p == 0:
                r //= p
        if r == 1:
            return k
        k += 2


def normalized_legendre(L_max: int, x, sin_x=None) -> np.ndarray:
    """Orthonormal associated Legendre values ``P_lm(x)`` for 0 <= m <= l <= L_max.

    Returns an array of shape ``(L_max + 1, L_max + 1) + x.shape`` indexed
    ``[m, l, ...]`` (entries with ``l < m`` are zero).  ``P_lm`` includes the
    ``1/sqrt(4 pi)`` factor and the Condon-Shortley phase, so
    ``Y_lm = P_lm(cos theta) exp(i m phi)``.

    The three-term recurrence in ``l`` is run on scaled values; each column
    carries a log-scale that is folded back when the value is written out, so
    high-order sectoral seeds (``sin^m``) never underflow mid-recurrence.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None)) if sin_x is None else np.asarray(sin_x, float)
    L = int(L_max)
    shape = x.shape
    xf = x.reshape(-1)
    sf = s.reshape(-1)
    npts = xf.size
    out = np.zeros((L + 1, L + 1, npts))

    ms = np.arange(L + 1)
    k = np.arange(1, L + 1)
    log_const = np.concatenate(([0.0], np.cumsum(0.5 * np.log((2 * k + 1) / (2.0 * k)))))
    # log |P_mm|, shape (M, npts); -inf where sin = 0 and m > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_s = np.log(sf)
        scale = -0.5 * np.log(4 * np.pi) + log_const[:, None] + np.where(
            ms[:, None] == 0, 0.0, ms[:, None] * log_s[None, :]
        )
    sign = np.where(ms % 2 == 0, 1.0, -1.0)

    p1 = np.zeros((L + 1, npts))  # scaled P_{l-1, m}
    p2 = np.zeros((L + 1, npts))  # scaled P_{l-2, m}
    for l in range(L + 1):
        cur = np.zeros((L + 1, npts))
        if l >= 2:
            m = ms[: l - 1]
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            cur[: l - 1] = a[:, None] * (xf[None, :] * p1[: l - 1] - b[:, None] * p2[: l - 1])
        if l >= 1:
            m = l - 1
            cur[m] = np.sqrt(2.0 * m + 3.0) * xf * p1[m]
        cur[l] = sign[l]

        big = np.abs(cur) > _RESCALE
        if big.any():
            cur = np.where(big, cur / _RESCALE, cur)
            p1 = np.where(big, p1 / _RESCALE, p1)
            scale = np.where(big, scale + _LOG_RESCALE, scale)
        with np.errstate(under="ignore"):
            out[: l + 1, l] = cur[: l + 1] * np.exp(scale[: l + 1])
        p2, p1 = p1, cur

    return out.reshape((L + 1, L + 1) + shape)


@dataclass(frozen=True, eq=False)
class Grid:
    """Gauss-Legendre (colatitude) x equispaced (longitude) collocation grid.

    Legendre tables are built on first use, so grids used only for their
    nodes and weights stay cheap.
    """

    L_max: int
    n_lat: int
    n_lon: int
    colatitudes: np.ndarray
    quad_weights: np.ndarray
    longitudes: np.ndarray
    cos_colat: np.ndarray = field(repr=False)
    sin_colat: np.ndarray = field(repr=False)

    @functools.cached_property
    def legendre(self) -> np.ndarray:
        """``P_lm`` at the nodes, shape ``(L+1, L+1, n_lat)`` indexed ``[m, l, j]``."""
        P = normalized_legendre(self.L_max, self.cos_colat, self.sin_colat)
        P.setflags(write=False)
        return P

    @functools.cached_property
    def legendre_dtheta(self) -> np.ndarray:
        """``d P_lm / d colatitude`` at the nodes, same layout as :attr:`legendre`."""
        L = self.L_max
        P = self.legendre
        x, s = self.cos_colat, self.sin_colat
        l = np.arange(L + 1)[None, :, None]
        m = np.arange(L + 1)[:, None, None]
        c = np.sqrt(np.clip((2 * l + 1) * (l * l - m * m), 0, None) / np.maximum(2 * l - 1, 1))
        prev = np.zeros_like(P)
        prev[:, 1:] = P[:, :-1]
        dP = (l * x * P - c * prev) / s
        dP.setflags(write=False)
        return dP

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_lat, self.n_lon)

    def unit_vectors(self) -> np.ndarray:
        """Node positions as an ``(n_lat, n_lon, 3)`` array of unit vectors."""
        th = self.colatitudes[:, None]
        ph = self.longitudes[None, :]
        return np.stack(
            np.broadcast_arrays(np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)),
            axis=-1,
        )

    def integrate(self, values) -> float:
        """Quadrature of a node-valued array over the unit sphere."""
        values = np.asarray(values)
        return float(2 * np.pi / self.n_lon * np.sum(self.quad_weights[:, None] * values))


@functools.lru_cache(maxsize=32)
def build_grid(L_max: int) -> Grid:
    """Grid resolving harmonics up to degree ``L_max`` (``2 <= L_max <= 2048``)."""
    if not isinstance(L_max, (int, np.integer)) or not 2 <= L_max <= 2048:
        raise ValueError(f"L_max must be an integer in [2, 2048], got {L_max!r}")
    L_max = int(L_max)
    n_lat = L_max + 1
    n_lon = _smooth_fft_size(2 * L_max + 1)
    x, w = roots_legendre(n_lat)
    x, w = x[::-1].copy(), w[::-1].copy()  # north to south
    colat = np.arccos(x)
    sin_colat = np.sqrt((1 - x) * (1 + x))
    lon = 2 * np.pi * np.arange(n_lon) / n_lon
    arrays = (colat, w, lon, x, sin_colat)
    for a in arrays:
        a.setflags(write=False)
    return Grid(L_max, n_lat, n_lon, colat, w, lon, x, sin_colat)


class SpectralField:
    """Complex harmonic coefficients of a real scalar field on the unit sphere.

    ``coeffs`` has length ``(L_max + 1)**2`` in the layout of :func:`lm_index`.
    """

    __slots__ = ("L_max", "coeffs")

    def __init__(self, L_max: int, coeffs=None):
        self.L_max = int(L_max)
        n = (self.L_max + 1) ** 2
        if coeffs is None:
            coeffs = np.zeros(n, dtype=complex)
        coeffs = np.asarray(coeffs, dtype=complex)
        if coeffs.shape != (n,):
            raise ValueError(f"expected {n} coefficients for L_max={L_max}, got {coeffs.shape}")
        self.coeffs = coeffs

    def __repr__(self):
        return f"SpectralField(L_max={self.L_max}, norm={self.norm():.6g})"

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, L_max: int) -> "SpectralField":
        return cls(L_max)

    @classmethod
    def constant(cls, L_max: int, value: float = 1.0) -> "SpectralField":
        f = cls(L_max)
        f.coeffs[0] = value * np.sqrt(4 * np.pi)
        return f

    @classmethod
    def harmonic(cls, L_max: int, l: int, m: int = 0, part: str = "real", amplitude: float = 1.0):
        """A single harmonic made real.

        ``part="real"`` gives ``Re Y_lm`` (for ``m = 0`` this is ``Y_l0``),
        ``part="imag"`` gives ``Im Y_lm``.
        """
        if not 0 <= abs(m) <= l <= L_max:
            raise ValueError(f"need |m| <= l <= L_max, got l={l}, m={m}, L_max={L_max}")
        f = cls(L_max)
        if m == 0:
            if part == "imag":
                return f
            f.coeffs[lm_index(l, 0)] = amplitude
            return f
        m = abs(m)
        sgn = (-1) ** m
        if part == "real":
            f.coeffs[lm_index(l, m)] = 0.5 * amplitude
            f.coeffs[lm_index(l, -m)] = 0.5 * sgn * amplitude
        elif part == "imag":
            f.coeffs[lm_index(l, m)] = -0.5j * amplitude
            f.coeffs[lm_index(l, -m)] = 0.5j * sgn * amplitude
        else:
            raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
        return f

    @classmethod
    def random(cls, L_max: int, rng=None, l_lo: int = 0, l_hi: int | None = None, scale=1.0):
        """Random real field with i.i.d. normal coefficients on ``l_lo <= l <= l_hi``."""
        rng = np.random.default_rng(rng)
        l_hi = L_max if l_hi is None else l_hi
        A = np.zeros((L_max + 1, L_max + 1), dtype=complex)
        for l in range(l_lo, l_hi + 1):
            A[0, l] = rng.standard_normal()
            A[1 : l + 1, l] = (rng.standard_normal(l) + 1j * rng.standard_normal(l)) / np.sqrt(2)
        return cls.from_m_major(A) * scale

    @classmethod
    def from_m_major(cls, A: np.ndarray) -> "SpectralField":
        """Build from the ``m >= 0`` block ``A[m, l]``, completing ``m < 0`` by reality."""
        A = np.asarray(A, dtype=complex)
        L = A.shape[1] - 1
        idx = _layout(L)
        out = np.empty((L + 1) ** 2, dtype=complex)
        out[idx.pos] = A[idx.m_pos, idx.l_pos]
        out[idx.neg] = idx.neg_sign * np.conj(A[idx.m_neg, idx.l_neg])
        out[idx.zero] = A[0, idx.l_zero].real
        return cls(L, out)

    # views --------------------------------------------------------------
    def m_major(self, L_max: int | None = None) -> np.ndarray:
        """The ``m >= 0`` block as ``A[m, l]`` of shape ``(L+1, L+1)``, zero padded."""
        L = self.L_max if L_max is None else L_max
        if L < self.L_max:
            raise GridMismatchError(f"cannot fit degree {self.L_max} into {L}")
        idx = _layout(self.L_max)
        A = np.zeros((L + 1, L + 1), dtype=complex)
        A[idx.m_nonneg, idx.l_nonneg] = self.coeffs[idx.nonneg]
        return A

    @property
    def degrees(self) -> np.ndarray:
        return _layout(self.L_max).l_all

    @property
    def orders(self) -> np.ndarray:
        return _layout(self.L_max).m_all

    def __getitem__(self, lm):
        l, m = lm
        return self.coeffs[lm_index(l, m)]

    def copy(self) -> "SpectralField":
        return SpectralField(self.L_max, self.coeffs.copy())

    def resized(self, L_max: int) -> "SpectralField":
        """Truncate or zero-pad to a new band limit."""
        n_old, n_new = (self.L_max + 1) ** 2, (L_max + 1) ** 2
        out = np.zeros(n_new, dtype=complex)
        k = min(n_old, n_new)
        out[:k] = self.coeffs[:k]
        return SpectralField(L_max, out)

    def low_pass(self, l_keep: int) -> "SpectralField":
        """Zero every mode with ``l > l_keep`` (band limit unchanged)."""
        out = self.coeffs.copy()
        out[self.degrees > l_keep] = 0
        return SpectralField(self.L_max, out)

    def multiply_by_degree(self, func) -> "SpectralField":
        """Apply a radial multiplier ``func(l)`` (array in, array out)."""
        return SpectralField(self.L_max, self.coeffs * func(self.degrees))

    def norm(self) -> float:
        """L2 norm over the unit sphere (Parseval)."""
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def dot(self, other: "SpectralField") -> float:
        """L2 inner product of two real fields."""
        L = min(self.L_max, other.L_max)
        n = (L + 1) ** 2
        return float(np.real(np.vdot(self.coeffs[:n], other.coeffs[:n])))

    def reality_defect(self) -> float:
        idx = _layout(self.L_max)
        pos = self.coeffs[idx.pos]
        neg = self.coeffs[idx.neg]
        d = np.abs(neg - idx.neg_sign * np.conj(pos))
        d0 = np.abs(self.coeffs[idx.zero].imag)
        return float(max(d.max(initial=0.0), d0.max(initial=0.0)))

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        if other.L_max != self.L_max:
            raise GridMismatchError(f"band limits differ: {self.L_max} vs {other.L_max}")
        return other

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return SpectralField(self.L_max, self.coeffs + other.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return SpectralField(self.L_max, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return NotImplemented
        return SpectralField(self.L_max, self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SpectralField(self.L_max, self.coeffs / scalar)

    def __neg__(self):
        return SpectralField(self.L_max, -self.coeffs)


class _Layout:
    def __init__(self, L):
        l_all = np.concatenate([np.full(2 * l + 1, l) for l in range(L + 1)])
        m_all = np.concatenate([np.arange(-l, l + 1) for l in range(L + 1)])
        self.l_all, self.m_all = l_all, m_all
        self.nonneg = np.flatnonzero(m_all >= 0)
        self.l_nonneg, self.m_nonneg = l_all[self.nonneg], m_all[self.nonneg]
        self.pos = np.flatnonzero(m_all > 0)
        self.l_pos, self.m_pos = l_all[self.pos], m_all[self.pos]
        self.neg = lm_index(self.l_pos, -self.m_pos)
        self.l_neg, self.m_neg = self.l_pos, self.m_pos
        self.neg_sign = np.where(self.m_pos % 2 == 0, 1.0, -1.0)
        self.zero = np.flatnonzero(m_all == 0)
        self.l_zero = l_all[self.zero]
        for a in vars(self).values():
            a.setflags(write=False)


@functools.lru_cache(maxsize=64)
def _layout(L: int) -> _Layout:
    return _Layout(L)


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Real values at the nodes of a grid, shape ``(n_lat, n_lon)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise GridMismatchError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("physical field contains non-finite values")
        object.__setattr__(self, "values", v)

    def integrate(self) -> float:
        return self.grid.integrate(self.values)


@dataclass(frozen=True, eq=False)
class VelocityField:
    """Tangent vector field by its components on ``(e_colat, e_lon)``."""

    grid: Grid
    u_colat: np.ndarray
    u_lon: np.ndarray

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u_colat, self.u_lon)

    def dot(self, other: "VelocityField") -> np.ndarray:
        return self.u_colat * other.u_colat + self.u_lon * other.u_lon

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.integrate(self.u_colat**2 + self.u_lon**2)))


# transforms ---------------------------------------------------------------


def _legendre_sum(A: np.ndarray, table: np.ndarray) -> np.ndarray:
    """``F[m, j] = sum_l A[m, l] table[m, l, j]`` for complex ``A``."""
    re = np.matmul(A.real[:, None, :], table)[:, 0, :]
    im = np.matmul(A.imag[:, None, :], table)[:, 0, :]
    return re + 1j * im


def _legendre_project(F: np.ndarray, table: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``A[m, l] = sum_j w_j F[m, j] table[m, l, j]``."""
    Fw = F * weights[None, :]
    re = np.matmul(table, Fw.real[:, :, None])[:, :, 0]
    im = np.matmul(table, Fw.imag[:, :, None])[:, :, 0]
    return re + 1j * im


def _fourier_synthesis(F: np.ndarray, n_lon: int) -> np.ndarray:
    """Real values from ``F[m, j]`` (``m >= 0``), shape ``(n_lat, n_lon)``."""
    M, n_lat = F.shape
    c = np.zeros((n_lat, n_lon // 2 + 1), dtype=complex)
    c[:, :M] = F.T
    return np.fft.irfft(c, n=n_lon, axis=1) * n_lon


def _fourier_analysis(values: np.ndarray, M: int) -> np.ndarray:
    """``F[m, j] = int_0^{2pi} f(theta_j, phi) exp(-i m phi) dphi`` for ``m < M``."""
    n_lon = values.shape[1]
    c = np.fft.rfft(values, axis=1) * (2 * np.pi / n_lon)
    return c[:, :M].T


def analyze(f: PhysicalField) -> SpectralField:
    """Orthonormal harmonic coefficients of node values (exact for degree <= L_max)."""
    g = f.grid
    F = _fourier_analysis(f.values, g.L_max + 1)
    A = _legendre_project(F, g.legendre, g.quad_weights)
    return SpectralField.from_m_major(A)


def synthesize(a: SpectralField, grid: Grid | None = None) -> PhysicalField:
    """Evaluate ``sum a_lm Y_lm`` at the nodes of ``grid``."""
    grid = build_grid(max(a.L_max, 2)) if grid is None else grid
    if a.L_max > grid.L_max:
        raise GridMismatchError(f"field degree {a.L_max} exceeds grid capacity {grid.L_max}")
    A = a.m_major(grid.L_max)
    F = _legendre_sum(A, grid.legendre)
    return PhysicalField(grid, _fourier_synthesis(F, grid.n_lon))


def _grid_for(a: SpectralField, grid: Grid | None) -> Grid:
    grid = build_grid(max(a.L_max, 2)) if grid is None else grid
    if a.L_max > grid.L_max:
        raise GridMismatchError(f"field degree {a.L_max} exceeds grid capacity {grid.L_max}")
    return grid


def surface_gradient(a: SpectralField, grid: Grid | None = None) -> VelocityField:
    """Frame components of the surface gradient at the grid nodes."""
    grid = _grid_for(a, grid)
    A = a.m_major(grid.L_max)
    m = np.arange(grid.L_max + 1)[:, None]
    F_theta = _legendre_sum(A, grid.legendre_dtheta)
    F_phi = 1j * m * _legendre_sum(A, grid.legendre) / grid.sin_colat[None, :]
    return VelocityField(
        grid,
        _fourier_synthesis(F_theta, grid.n_lon),
        _fourier_synthesis(F_phi, grid.n_lon),
    )


def perp_gradient(a: SpectralField, grid: Grid | None = None) -> VelocityField:
    """``n x grad f``: the gradient rotated a quarter turn counter-clockwise about ``n``."""
    g = surface_gradient(a, grid)
    return VelocityField(g.grid, -g.u_lon, g.u_colat.copy())


def divergence(v: VelocityField) -> SpectralField:
    """Coefficients of the surface divergence, via ``<div u, Y> = -<u, grad Y>``."""
    grid = v.grid
    M = grid.L_max + 1
    U_th = _fourier_analysis(v.u_colat, M)
    U_ph = _fourier_analysis(v.u_lon, M)
    m = np.arange(M)[:, None]
    A_th = _legendre_project(U_th, grid.legendre_dtheta, grid.quad_weights)
    A_ph = _legendre_project(U_ph / grid.sin_colat[None, :], grid.legendre, grid.quad_weights)
    A = -(A_th - 1j * m * A_ph)
    return SpectralField.from_m_major(A)


def laplacian(a: SpectralField) -> SpectralField:
    return a.multiply_by_degree(lambda l: -l * (l + 1.0))


def angular_momentum(a: SpectralField, axis: int) -> SpectralField:
    """Apply the real rotation generator about ambient axis 1, 2 or 3.

    The generator about ``e_k`` is the vector field ``x -> e_k x x``; for axis 3
    this is ``d/dlon``.  In coefficient space, with ``J_+-`` the ladder
    operators of quantum angular momentum, ``R_3 = i m``,
    ``R_1 = i (J_+ + J_-) / 2`` and ``R_2 = (J_+ - J_-) / 2``.
    """
    L = a.L_max
    lay = _layout(L)
    l, m = lay.l_all, lay.m_all
    c = a.coeffs
    if axis == 3:
        return SpectralField(L, 1j * m * c)
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis!r}")
    # (J_+ f)_{l,m} = sqrt(l(l+1) - (m-1)m) a_{l,m-1};  (J_- f)_{l,m} = sqrt(l(l+1) - (m+1)m) a_{l,m+1}
    jp = np.zeros_like(c)
    jm = np.zeros_like(c)
    has_lower = m > -l
    has_upper = m < l
    src = np.flatnonzero(has_lower)
    jp[src] = np.sqrt(l[src] * (l[src] + 1.0) - (m[src] - 1.0) * m[src]) * c[src - 1]
    src = np.flatnonzero(has_upper)
    jm[src] = np.sqrt(l[src] * (l[src] + 1.0) - (m[src] + 1.0) * m[src]) * c[src + 1]
    if axis == 1:
        out = 0.5j * (jp + jm)
    else:
        out = 0.5 * (jp - jm)
    return SpectralField(L, out)


# point evaluation ----------------------------------------------------------


def _as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.shape[-1] != 3:
        raise ValueError(f"points must have a trailing dimension of 3, got {p.shape}")
    return p


def evaluate_many(fields: Sequence[SpectralField], points, chunk: int | None = None) -> np.ndarray:
    """Evaluate several fields at arbitrary unit vectors.

    Returns an array of shape ``(len(fields),) + points.shape[:-1]``.
    """
    p = _as_points(points)
    lead = p.shape[:-1]
    p = p.reshape(-1, 3)
    L = max(f.L_max for f in fields)
    A = np.stack([f.m_major(L) for f in fields])  # (K, M, L+1)
    K = len(fields)
    out = np.empty((K, p.shape[0]))
    if chunk is None:
        chunk = max(1, int(4_000_000 // ((L + 1) ** 2)))
    mvec = np.arange(L + 1)
    for start in range(0, p.shape[0], chunk):
        q = p[start : start + chunk]
        z = np.clip(q[:, 2], -1.0, 1.0)
        s = np.hypot(q[:, 0], q[:, 1])
        phi = np.arctan2(q[:, 1], q[:, 0])
        P = normalized_legendre(L, z, s)  # (M, L+1, n)
        F = np.einsum("kml,mln->kmn", A.real, P) + 1j * np.einsum("kml,mln->kmn", A.imag, P)
        e = np.exp(1j * mvec[:, None] * phi[None, :])
        w = np.where(mvec == 0, 1.0, 2.0)[:, None]
        out[:, start : start + chunk] = np.einsum("kmn,mn->kn", F, w * e).real
    return out.reshape((K,) + lead)


def evaluate(a: SpectralField, points) -> np.ndarray:
    """Evaluate one field at arbitrary unit vectors (trailing dimension 3)."""
    return evaluate_many([a], points)[0]


def _node_peaks(values: np.ndarray, count: int) -> np.ndarray:
    """Flat indices of the largest grid-local maxima of ``values`` (periodic in longitude)."""
    v = np.pad(values, ((1, 1), (0, 0)), constant_values=-np.inf)
    peak = np.ones(values.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                peak &= values >= np.roll(v, (-di, -dj), axis=(0, 1))[1:-1]
    idx = np.flatnonzero(peak)
    return idx[np.argsort(values.reshape(-1)[idx])[::-1][:count]]


def _polish(a: SpectralField, gens, x0: np.ndarray, sign: float, scale: float) -> tuple[float, np.ndarray]:
    from scipy.optimize import minimize

    helper = np.array([1.0, 0.0, 0.0]) if abs(x0[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - helper.dot(x0) * x0
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(x0, e1)

    def objective(uv):
        y = x0 + uv[0] * e1 + uv[1] * e2
        n = np.linalg.norm(y)
        x = y / n
        f, *R = evaluate_many([a, *gens], x)
        grad = np.cross(np.array(R), x)  # tangent gradient from the generator components
        dx = np.stack([e1 - e1.dot(x) * x, e2 - e2.dot(x) * x]) / n
        return -sign * f, -sign * (dx @ grad)

    res = minimize(objective, np.zeros(2), jac=True, method="BFGS", options={"gtol": 1e-12 * max(1.0, scale)})
    y = x0 + res.x[0] * e1 + res.x[1] * e2
    x = y / np.linalg.norm(y)
    return float(evaluate(a, x)), x


def locate_extremum(
    a: SpectralField, oversample: int = 2, polish: bool = True, candidates: int = 8
) -> tuple[float, np.ndarray]:
    """Signed value and position of the extremum of ``|f|``.

    Candidates are the largest local maxima of ``|f|`` over the nodes of a
    grid of degree ``oversample * L_max``, plus the two poles, which
    Gauss-Legendre grids never contain.  Each is refined by BFGS in tangent
    coordinates, and the best refined value wins.
    """
    grid = build_grid(max(int(oversample * a.L_max), 4))
    vals = synthesize(a, grid).values
    nodes = grid.unit_vectors().reshape(-1, 3)
    poles = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    pts = np.concatenate([nodes[_node_peaks(np.abs(vals), candidates)], poles])
    cand = evaluate(a, pts)
    i = int(np.argmax(np.abs(cand)))
    best = (float(cand[i]), pts[i])
    if not polish or best[0] == 0.0:
        return best
    gens = [angular_momentum(a, k) for k in (1, 2, 3)]
    scale = abs(best[0])
    for x0, v0 in zip(pts, cand):
        if abs(v0) < 0.9 * scale:  # grid values are within a few percent of the true peaks
            continue
        v, x = _polish(a, gens, x0, np.sign(v0), scale)
        if abs(v) < abs(v0):
            v, x = float(v0), x0
        if abs(v) > abs(best[0]):
            best = (v, x)
    return best


def sup_norm(a: SpectralField, oversample: int = 2) -> float:
    """``max |f|`` over the sphere (see :func:`locate_extremum`)."""
    return abs(locate_extremum(a, oversample)[0])
