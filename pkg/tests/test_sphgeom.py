import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from gausskraft import sphgeom
from gausskraft.errors import DegeneratePolygon, NonPositiveDot, ZeroVector

E1, E2, E3 = np.eye(3)
OCTANT = sphgeom.SphericalPolygon(np.eye(3))


def unit_vectors(dim=3):
    return st.lists(st.floats(-1, 1), min_size=dim, max_size=dim).filter(lambda v: np.linalg.norm(v) > 0.1)


def test_normalize_rejects_zero():
    with pytest.raises(ZeroVector):
        sphgeom.normalize([0.0, 0.0, 0.0])


def test_sphere_measures():
    assert sphgeom.sphere_measure(1) == pytest.approx(2 * np.pi)
    assert sphgeom.sphere_measure(2) == pytest.approx(4 * np.pi)


def test_octant_and_hemisphere_areas():
    assert sphgeom.polygon_area(OCTANT) == pytest.approx(np.pi / 2, abs=1e-14)
    square = sphgeom.SphericalPolygon(np.array([E1, E2, -E1, -E2]))
    assert sphgeom.polygon_area(square) == pytest.approx(2 * np.pi, abs=1e-12)
    assert sphgeom.polygon_area(sphgeom.Arc(0.3, 1.1)) == pytest.approx(1.1)


def test_degenerate_polygon():
    with pytest.raises(DegeneratePolygon):
        sphgeom.polygon_area(sphgeom.SphericalPolygon(np.array([E1, E1, E2])))
    with pytest.raises(DegeneratePolygon):
        sphgeom.polygon_area(sphgeom.SphericalPolygon(np.array([E1, E2])))
    # vertices on one great circle bound a zero-area sliver
    sliver = sphgeom.SphericalPolygon(np.array([E1, sphgeom.normalize(E1 + E2), E2]))
    assert sphgeom.polygon_area(sliver) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(unit_vectors(), unit_vectors(), unit_vectors())
def test_triangle_area_matches_angle_excess(a, b, c):
    tri = np.array([sphgeom.normalize(v) for v in (a, b, c)])
    ref = float(sphgeom.triangle_area(*tri))
    if ref < 1e-4:
        return
    # orient counterclockwise as seen from outside
    if np.dot(np.cross(tri[0], tri[1]), tri[2]) < 0:
        tri = tri[::-1]
    assert sphgeom.polygon_area(sphgeom.SphericalPolygon(tri)) == pytest.approx(ref, abs=1e-10)


def test_log_dot_closed_forms():
    # hemisphere: int_0^{pi/2} log(cos t) sin t dt * 2 pi = -2 pi
    square = sphgeom.SphericalPolygon(np.array([E1, E2, -E1, -E2]))
    assert sphgeom.integrate_log_dot(E3, square) == pytest.approx(-2 * np.pi, abs=1e-12)
    # octant with apex at a corner: a quarter of the hemisphere
    assert sphgeom.integrate_log_dot(E3, OCTANT) == pytest.approx(-np.pi / 2, abs=1e-12)


def test_log_dot_rejects_far_side():
    with pytest.raises(NonPositiveDot):
        sphgeom.integrate_log_dot(-E3 + 0.5 * E1, OCTANT)


@settings(max_examples=20, deadline=None)
@given(unit_vectors(), st.floats(0.05, 0.6), st.floats(0.0, 6.0))
def test_log_dot_fans_match_seven_point_rule(axis, radius, spin):
    # small triangle near an apex; both methods must agree
    apex = sphgeom.normalize(axis)
    helper = E1 if abs(apex[0]) < 0.9 else E2
    u = sphgeom.normalize(np.cross(apex, helper))
    v = np.cross(apex, u)
    angles = spin + np.array([0.0, 2.0, 4.0])
    tri = np.array([sphgeom.normalize(apex + radius * (np.cos(t) * u + np.sin(t) * v)) for t in angles])
    fans = sphgeom.integrate_log_dot(apex, sphgeom.SphericalPolygon(tri))
    ref = sphgeom.integrate(lambda N: np.log(N @ apex), sphgeom.SphericalPolygon(tri), tol=1e-11)
    assert fans == pytest.approx(ref, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(-1.4, 1.4), st.floats(0.01, 1.5))
def test_arc_log_dot_matches_quad(apex, offset, length):
    start = apex + offset
    if offset + length > np.pi / 2:
        length = np.pi / 2 - offset
    if length <= 0:
        return
    ref, _ = quad(lambda t: np.log(np.cos(t - apex)), start, start + length, epsabs=1e-13)
    assert sphgeom.arc_log_dot(apex, start, length) == pytest.approx(ref, abs=1e-10)


def test_half_circle_log_integral():
    # int_{-pi/2}^{pi/2} log cos = -pi ln 2
    assert sphgeom.arc_log_dot(0.0, -np.pi / 2, np.pi) == pytest.approx(-np.pi * np.log(2), abs=1e-12)


def test_seven_point_rule_is_exact_on_constants():
    vals = sphgeom.integrate_triangles(lambda N: np.ones(len(N)), np.eye(3)[None], tol=1e-12)
    assert vals[0] == pytest.approx(np.pi / 2, abs=1e-12)


def test_adaptive_gauss_legendre_batch():
    def f(idx, t):
        return np.exp(t) * (idx[:, None] + 1)

    vals = sphgeom.adaptive_gauss_legendre(f, np.zeros(3), np.ones(3), 1e-12)
    assert np.allclose(vals, (np.e - 1) * np.arange(1, 4), atol=1e-12)


@pytest.mark.parametrize("level", [0, 1, 2, 3])
def test_partition_counts_and_areas(level):
    part = sphgeom.geodesic_partition(level)
    assert len(part) == 20 * 4**level
    assert part.areas.sum() == pytest.approx(4 * np.pi, abs=1e-12)
    for k in range(0, len(part), max(1, len(part) // 10)):
        assert part.contains(k, part.representatives[k])


def test_partition_diameters_shrink():
    d = [sphgeom.geodesic_partition(l).diameters().max() for l in range(4)]
    assert all(a > 1.7 * b for a, b in zip(d, d[1:]))


def test_partition_nesting():
    coarse, fine = sphgeom.geodesic_partition(1), sphgeom.geodesic_partition(2)
    for k in (0, 17, 79):
        kids = fine.areas[4 * k : 4 * k + 4]
        assert kids.sum() == pytest.approx(coarse.areas[k], rel=1e-12)
        for j in range(4 * k, 4 * k + 4):
            assert coarse.contains(k, fine.representatives[j])


def test_circle_partition():
    part = sphgeom.geodesic_partition(2, dimension=1)
    assert len(part) == 32
    assert part.areas.sum() == pytest.approx(2 * np.pi)
    assert np.array_equal(sphgeom.locate(part, part.representatives), np.arange(32))


@settings(max_examples=20, deadline=None)
@given(st.lists(unit_vectors(), min_size=1, max_size=20), st.integers(0, 3))
def test_locate_finds_containing_cell(vectors, level):
    pts = np.array([sphgeom.normalize(v) for v in vectors])
    part = sphgeom.geodesic_partition(level)
    cells = sphgeom.locate(part, pts)
    for p, k in zip(pts, cells):
        assert part.contains(int(k), p, tol=1e-12)
