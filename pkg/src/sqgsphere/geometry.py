"""Point geometry of the round unit sphere centred at the origin."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PoleProximityError",
    "UnitVector",
    "StereoPoint",
    "ExpansionReport",
    "geodesic_distance",
    "geodesic_distances",
    "stereographic_project",
    "stereographic_unproject",
    "rotation_expansion_report",
    "random_unit_vectors",
    "tangent_frame",
    "NORTH_POLE",
    "SOUTH_POLE",
]

POLE_TOLERANCE = 1e-10


class PoleProximityError(ValueError):
    """The point is too close to the projection pole (0, 0, 1)."""


@dataclass(frozen=True)
class UnitVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        r = np.sqrt(self.x**2 + self.y**2 + self.z**2)
        if not np.isfinite(r) or r == 0.0:
            raise ValueError("cannot normalize a zero or non-finite vector")
        if abs(r - 1.0) > 1e-15:
            object.__setattr__(self, "x", float(self.x / r))
            object.__setattr__(self, "y", float(self.y / r))
            object.__setattr__(self, "z", float(self.z / r))

    @classmethod
    def from_array(cls, v) -> "UnitVector":
        v = np.asarray(v, dtype=float)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    @classmethod
    def from_angles(cls, colatitude: float, longitude: float) -> "UnitVector":
        s = np.sin(colatitude)
        return cls(s * np.cos(longitude), s * np.sin(longitude), np.cos(colatitude))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def colatitude(self) -> float:
        return float(np.arctan2(np.hypot(self.x, self.y), self.z))

    @property
    def longitude(self) -> float:
        return float(np.arctan2(self.y, self.x) % (2 * np.pi))


NORTH_POLE = UnitVector(0.0, 0.0, 1.0)
SOUTH_POLE = UnitVector(0.0, 0.0, -1.0)


@dataclass(frozen=True)
class StereoPoint:
    w1: float
    w2: float


def geodesic_distance(p: UnitVector, q: UnitVector) -> float:
    """Great-circle distance in radians, in [0, pi]."""
    d = p.x * q.x + p.y * q.y + p.z * q.z
    return float(np.arccos(min(1.0, max(-1.0, d))))


def geodesic_distances(p, q) -> np.ndarray:
    """Vectorized distance between arrays of unit vectors (trailing dim 3)."""
    d = np.sum(np.asarray(p) * np.asarray(q), axis=-1)
    return np.arccos(np.clip(d, -1.0, 1.0))


def stereographic_project(p: UnitVector) -> StereoPoint:
    """``(w1, w2) = (x / (1 - z), y / (1 - z))``, projecting from the north pole."""
    if p.z >= 1.0 - POLE_TOLERANCE:
        raise PoleProximityError(f"z = {p.z!r} is within {POLE_TOLERANCE} of the projection pole")
    d = 1.0 - p.z
    return StereoPoint(p.x / d, p.y / d)


def stereographic_unproject(w: StereoPoint) -> UnitVector:
    r2 = w.w1**2 + w.w2**2
    d = 1.0 + r2
    return UnitVector(2 * w.w1 / d, 2 * w.w2 / d, (r2 - 1.0) / d)


def random_unit_vectors(n: int, rng=None) -> np.ndarray:
    """``n`` uniformly distributed points as an ``(n, 3)`` array."""
    rng = np.random.default_rng(rng)
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def tangent_frame(x) -> tuple[np.ndarray, np.ndarray]:
    """Two orthonormal tangent vectors at ``x`` (right-handed with ``x``)."""
    x = np.asarray(x, dtype=float)
    helper = np.array([1.0, 0.0, 0.0]) if abs(x[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - np.dot(helper, x) * x
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(x, e1)
    return e1, e2


@dataclass(frozen=True)
class ExpansionReport:
    """Worst-case deviation of the rotation generator from a coordinate field.

    Coefficients are measured at the sample where each deviation is largest.
    """

    h: float
    coeff_11: float
    coeff_12: float
    dev_11: float
    dev_12: float


def _orbit_velocity(y0, beta):
    # Orbit of rotation about the y-axis through a point near the south pole:
    # (c sin b, y0, -c cos b), c = sqrt(1 - y0^2), pushed through the projection
    # and rescaled by 2 so the chart is isometric at the south pole.
    c = np.sqrt(1.0 - y0 * y0)
    den = (1.0 + c * np.cos(beta)) ** 2
    dw1 = 2.0 * c * (np.cos(beta) + c) / den
    dw2 = 2.0 * y0 * c * np.sin(beta) / den
    return dw1, dw2


def rotation_expansion_report(h: float, samples: int = 32) -> ExpansionReport:
    """Expand the rotation generator in stereographic coordinates near the south pole.

    Samples a ``samples x samples`` box ``|y0| <= h, |beta| <= h`` of orbit
    height and rotation angle, and reports the largest deviation of the
    generator's components from ``(1, 0)``.
    """
    if not 0.0 < h <= 0.3:
        raise ValueError(f"h must lie in (0, 0.3], got {h!r}")
    s = np.linspace(-h, h, samples)
    y0, beta = np.meshgrid(s, s, indexing="ij")
    dw1, dw2 = _orbit_velocity(y0, beta)
    e11 = np.abs(dw1 - 1.0)
    e12 = np.abs(dw2)
    i11 = np.unravel_index(np.argmax(e11), e11.shape)
    i12 = np.unravel_index(np.argmax(e12), e12.shape)
    return ExpansionReport(
        h=float(h),
        coeff_11=float(dw1[i11]),
        coeff_12=float(dw2[i12]),
        dev_11=float(e11[i11]),
        dev_12=float(e12[i12]),
    )
