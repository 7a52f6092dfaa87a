import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import EXPANSION_H01_DEV11, EXPANSION_H01_DEV12
from sqgsphere.geometry import (
    NORTH_POLE,
    SOUTH_POLE,
    PoleProximityError,
    StereoPoint,
    UnitVector,
    _orbit_velocity,
    geodesic_distance,
    rotation_expansion_report,
    stereographic_project,
    stereographic_unproject,
    tangent_frame,
)

angles = st.tuples(st.floats(0.0, np.pi), st.floats(0.0, 2 * np.pi))


def test_unit_vector_normalizes():
    v = UnitVector(3.0, 0.0, 4.0)
    assert np.isclose(np.linalg.norm(v.as_array()), 1.0)
    with pytest.raises(ValueError):
        UnitVector(0.0, 0.0, 0.0)


def test_geodesic_distance_examples():
    assert geodesic_distance(NORTH_POLE, SOUTH_POLE) == pytest.approx(np.pi)
    assert geodesic_distance(NORTH_POLE, UnitVector(1, 0, 0)) == pytest.approx(np.pi / 2)
    assert geodesic_distance(NORTH_POLE, NORTH_POLE) == 0.0


@given(angles, angles)
def test_distance_symmetric_and_bounded(a, b):
    p, q = UnitVector.from_angles(*a), UnitVector.from_angles(*b)
    d = geodesic_distance(p, q)
    assert 0.0 <= d <= np.pi
    assert d == pytest.approx(geodesic_distance(q, p), abs=1e-15)


@given(st.floats(0.01, np.pi), st.floats(0.0, 2 * np.pi))
def test_stereographic_round_trip(colat, lon):
    p = UnitVector.from_angles(colat, lon)
    q = stereographic_unproject(stereographic_project(p))
    assert np.allclose(p.as_array(), q.as_array(), atol=1e-12)


def test_south_pole_maps_to_origin():
    w = stereographic_project(SOUTH_POLE)
    assert (w.w1, w.w2) == (0.0, 0.0)
    assert stereographic_unproject(StereoPoint(0.0, 0.0)).z == -1.0


def test_projection_pole_rejected():
    with pytest.raises(PoleProximityError):
        stereographic_project(NORTH_POLE)


@given(angles)
def test_tangent_frame_orthonormal(a):
    x = UnitVector.from_angles(*a).as_array()
    e1, e2 = tangent_frame(x)
    M = np.stack([x, e1, e2])
    assert np.allclose(M @ M.T, np.eye(3), atol=1e-12)
    assert np.allclose(np.cross(x, e1), e2, atol=1e-12)


def test_orbit_velocity_matches_symbolic_derivative():
    y0, b = sp.symbols("y0 beta", real=True)
    c = sp.sqrt(1 - y0**2)
    x, y, z = c * sp.sin(b), y0, -c * sp.cos(b)
    w1, w2 = 2 * x / (1 - z), 2 * y / (1 - z)  # chart scaled to be isometric at the south pole
    d1, d2 = sp.lambdify((y0, b), sp.diff(w1, b)), sp.lambdify((y0, b), sp.diff(w2, b))
    for yy, bb in [(0.0, 0.0), (0.1, -0.2), (-0.25, 0.3), (0.05, 0.05)]:
        v1, v2 = _orbit_velocity(yy, bb)
        assert v1 == pytest.approx(d1(yy, bb), abs=1e-14)
        assert v2 == pytest.approx(d2(yy, bb), abs=1e-14)


def test_expansion_frozen_values():
    r = rotation_expansion_report(0.1)
    assert r.dev_11 == pytest.approx(EXPANSION_H01_DEV11, rel=1e-12)
    assert r.dev_12 == pytest.approx(EXPANSION_H01_DEV12, rel=1e-12)


def test_expansion_small_h_is_coordinate_field():
    r = rotation_expansion_report(1e-6)
    assert r.dev_11 < 1e-11 and r.dev_12 < 1e-11


def test_expansion_second_order():
    hs = np.array([0.2, 0.1, 0.05, 0.025])
    dev = [rotation_expansion_report(h).dev_11 for h in hs]
    slope = np.polyfit(np.log(hs), np.log(dev), 1)[0]
    assert abs(slope - 2.0) <= 0.1


def test_expansion_rejects_large_h():
    with pytest.raises(ValueError):
        rotation_expansion_report(0.5)


@pytest.mark.parametrize("p, w", [((1.0, 0.0, 0.0), (1.0, 0.0)), ((0.0, 1.0, 0.0), (0.0, 1.0))])
def test_stereographic_equator_examples(p, w):
    s = stereographic_project(UnitVector(*p))
    assert (s.w1, s.w2) == pytest.approx(w, abs=1e-15)


@settings(max_examples=200)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_unit_norm_after_construction(x, y, z):
    if x * x + y * y + z * z < 1e-6:
        return
    assert abs(np.linalg.norm(UnitVector(x, y, z).as_array()) - 1.0) <= 1e-14


def test_random_pairs_symmetric_and_triangle():
    from sqgsphere.geometry import geodesic_distances, random_unit_vectors

    p, q, r = (random_unit_vectors(10_000, s) for s in (1, 2, 3))
    assert np.array_equal(geodesic_distances(p, q), geodesic_distances(q, p))
    assert np.all(geodesic_distances(p, r) <= geodesic_distances(p, q) + geodesic_distances(q, r) + 1e-12)


def test_expansion_quadratic_ratio_bounded_and_monotone():
    hs = np.geomspace(1e-3, 0.2, 12)
    reps = [rotation_expansion_report(h) for h in hs]
    assert all(r.dev_11 >= 0 and r.dev_12 >= 0 for r in reps)
    assert max(r.dev_11 / r.h**2 for r in reps) < 1.0
    assert max(r.dev_12 / r.h**2 for r in reps) < 1.0
    dev = [r.dev_11 for r in reps]
    assert all(a < b for a, b in zip(dev, dev[1:]))
