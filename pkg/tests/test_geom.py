import numpy as np
import pytest

from soccerwalk.geom import (
    ConvexPolygon,
    DegenerateGeometryError,
    Footprint,
    InvalidDurationError,
    Pose2,
    compose,
    convex_hull,
    cubic_between,
    halfplanes,
    wrap_angle,
)


def test_wrap_angle_interval():
    for a in np.linspace(-20, 20, 2001):
        w = wrap_angle(a)
        assert -np.pi < w <= np.pi
        assert abs(np.sin(w) - np.sin(a)) < 1e-12
        assert abs(np.cos(w) - np.cos(a)) < 1e-12
    assert wrap_angle(np.pi) == pytest.approx(np.pi)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)


def test_compose_identity():
    p = Pose2(1.3, -0.7, 0.4)
    assert compose(Pose2(), p).almost_equal(p)
    assert compose(p, Pose2()).almost_equal(p)


def test_compose_quarter_turn():
    out = compose(Pose2(1, 0, np.pi / 2), Pose2(1, 0, 0))
    assert out.almost_equal(Pose2(1, 1, np.pi / 2))


def test_compose_inverse_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(200):
        p = Pose2(*rng.normal(size=3))
        q = Pose2(*rng.normal(size=3))
        back = compose(p, compose(p.inverse(), q))
        assert back.almost_equal(q, tol=1e-12)


def test_compose_associative():
    rng = np.random.default_rng(1)
    for _ in range(100):
        a, b, c = (Pose2(*rng.normal(size=3)) for _ in range(3))
        left = compose(compose(a, b), c)
        right = compose(a, compose(b, c))
        assert left.almost_equal(right, tol=1e-10)


def test_footprint_corners_ccw():
    fp = Footprint(0.14, 0.08, Pose2(0.3, -0.2, 0.7))
    corners = fp.corners()
    assert corners.shape == (4, 2)
    poly = ConvexPolygon(corners)
    assert poly.area() == pytest.approx(0.14 * 0.08, rel=1e-12)


def test_footprint_rejects_degenerate():
    with pytest.raises(DegenerateGeometryError):
        Footprint(0.0, 0.08)


def test_hull_interior_point_removed():
    square = [(0, 0), (1, 0), (1, 1), (0, 1)]
    hull = convex_hull(square + [(0.5, 0.5)])
    assert len(hull) == 4
    assert set(map(tuple, hull.vertices)) == set(square)


def test_hull_idempotent_on_footprints():
    fp = Footprint(0.14, 0.08, Pose2(0.1, 0.2, 0.3))
    once = convex_hull(np.vstack([fp.corners(), fp.corners()]))
    assert len(once) == 4
    twice = convex_hull(once.vertices)
    assert np.allclose(np.sort(once.vertices, axis=0), np.sort(twice.vertices, axis=0))


def test_hull_two_offset_footprints():
    a = Footprint(0.14, 0.08, Pose2(0, 0, 0)).corners()
    b = Footprint(0.14, 0.08, Pose2(0.05, 0.10, 0)).corners()
    hull = convex_hull(np.vstack([a, b]))
    assert len(hull) == 6
    # brute-force containment of every input point
    for p in np.vstack([a, b]):
        assert hull.contains(p, tol=1e-9)
    assert hull.area() >= 0.14 * 0.08


def test_hull_collinear_error():
    with pytest.raises(DegenerateGeometryError):
        convex_hull([(0, 0), (1, 1), (2, 2), (3, 3)])


def test_hull_of_hull_idempotence_random():
    rng = np.random.default_rng(2)
    for _ in range(50):
        pts = rng.normal(size=(rng.integers(3, 30), 2))
        try:
            h1 = convex_hull(pts)
        except DegenerateGeometryError:
            continue
        h2 = convex_hull(h1.vertices)
        assert len(h1) == len(h2)
        assert np.allclose(np.sort(h1.vertices, axis=0), np.sort(h2.vertices, axis=0))


def test_halfplanes_unit_square():
    poly = ConvexPolygon([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)])
    normals, offsets = halfplanes(poly)
    assert normals.shape == (4, 2)
    assert np.allclose(offsets, 0.5)
    assert np.allclose(np.linalg.norm(normals, axis=1), 1.0)


def test_halfplanes_centroid_strictly_inside():
    rng = np.random.default_rng(3)
    for _ in range(30):
        pts = rng.normal(size=(12, 2))
        try:
            poly = convex_hull(pts)
        except DegenerateGeometryError:
            continue
        normals, offsets = poly.halfplanes()
        c = poly.centroid()
        assert np.all(normals @ c < offsets - 1e-12)


def test_halfplanes_agree_with_point_in_polygon():
    rng = np.random.default_rng(4)
    poly = convex_hull(rng.normal(size=(20, 2)))
    normals, offsets = poly.halfplanes()
    pts = rng.uniform(-3, 3, size=(10_000, 2))
    by_rows = np.all(pts @ normals.T <= offsets + 1e-12, axis=1)
    by_test = np.array([poly.contains(p) for p in pts])
    assert np.array_equal(by_rows, by_test)


def test_polygon_shrink():
    poly = ConvexPolygon([(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)])
    small = poly.shrink(0.1)
    assert small.area() == pytest.approx(0.8 * 0.8, rel=1e-12)


def test_cubic_zero_case():
    seg = cubic_between(0, 0, 0, 0, 1.0)
    for t in np.linspace(0, 1, 11):
        assert seg.value(t) == 0.0
        assert seg.velocity(t) == 0.0


def test_cubic_smoothstep_midpoint():
    seg = cubic_between(0, 0, 1, 0, 1.0)
    assert seg.value(0.5) == pytest.approx(0.5, abs=1e-12)
    # velocity maximal at the midpoint of the unique zero-slope interpolant
    vel_mid = seg.velocity(0.5)
    for t in np.linspace(0, 1, 101):
        assert seg.velocity(t) <= vel_mid + 1e-12


def test_cubic_boundary_conditions():
    rng = np.random.default_rng(5)
    for _ in range(100):
        p0, v0, p1, v1 = rng.normal(size=4)
        T = rng.uniform(0.05, 3.0)
        seg = cubic_between(p0, v0, p1, v1, T)
        assert seg.value(0.0) == pytest.approx(p0, abs=1e-12)
        assert seg.value(T) == pytest.approx(p1, abs=max(1e-12, 1e-12 * abs(p1)))
        assert seg.velocity(0.0) == pytest.approx(v0, abs=1e-12)
        assert seg.velocity(T) == pytest.approx(v1, abs=max(1e-11, 1e-11 * abs(v1)))


def test_cubic_invalid_duration():
    with pytest.raises(InvalidDurationError):
        cubic_between(0, 0, 1, 0, 0.0)
    with pytest.raises(InvalidDurationError):
        cubic_between(0, 0, 1, 0, -1.0)


def test_cubic_derivative_matches_finite_differences():
    rng = np.random.default_rng(6)
    seg = cubic_between(*rng.normal(size=4), 1.7)
    eps = 1e-7
    for t in np.linspace(eps, 1.7 - eps, 100):
        fd = (seg.value(t + eps) - seg.value(t - eps)) / (2 * eps)
        v = seg.velocity(t)
        assert abs(fd - v) <= 1e-6 * max(1.0, abs(v))
