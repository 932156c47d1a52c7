import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bri2d.geometry import (Disk, DiskUnion, GeometryError, Point2, PolarPoint, Polyline, contains,
                            dist_point_polyline, lifted_angles, polyline_min_distance_to_union, to_polar)

coord = st.floats(-50, 50, allow_nan=False)


def test_to_polar_axis_points():
    p = to_polar(Point2(1.0, 0.0))
    assert (p.r, p.theta) == (1.0, 0.0)
    q = to_polar(Point2(0.0, 1.0))
    assert q.r == 1.0 and q.theta == pytest.approx(math.pi / 2)


def test_to_polar_lifts_continuously():
    p = to_polar(Point2(-1.0, 0.0), prev_theta=math.pi - 0.1)
    assert p.r == 1.0 and p.theta == pytest.approx(math.pi)
    # winding past pi keeps increasing instead of wrapping to -pi
    q = to_polar(Point2(-1.0, -0.01), prev_theta=math.pi)
    assert q.theta > math.pi


@given(coord, coord)
def test_polar_roundtrip(x, y):
    if math.hypot(x, y) < 1e-6:
        return
    c = to_polar(Point2(x, y)).to_cartesian()
    assert c.x == pytest.approx(x, rel=1e-12, abs=1e-12 * math.hypot(x, y))
    assert c.y == pytest.approx(y, rel=1e-12, abs=1e-12 * math.hypot(x, y))


def test_lifted_angles_follow_winding():
    t = np.linspace(0, 6 * math.pi, 400)
    xy = np.column_stack([np.cos(t), np.sin(t)]) * 2.0
    th = lifted_angles(xy)
    np.testing.assert_allclose(th, t, atol=1e-12)


def test_dist_point_polyline_examples():
    path = Polyline(np.array([0.0, 1.0]), np.array([[1.0, 0.0], [2.0, 0.0]]))
    assert dist_point_polyline(Point2(0.0, 0.0), path) == pytest.approx(1.0)
    assert dist_point_polyline(Point2(1.5, 0.0), path) == 0.0
    seg = Polyline(np.array([0.0, 1.0]), np.array([[-1.0, 0.0], [1.0, 0.0]]))
    assert dist_point_polyline(Point2(0.0, 1.0), seg) == pytest.approx(1.0)


@settings(max_examples=60)
@given(coord, coord, coord, coord)
def test_dist_point_polyline_is_1_lipschitz(ax, ay, bx, by):
    xy = np.array([[0.0, 0.0], [3.0, 1.0], [-2.0, 4.0], [5.0, -3.0]])
    path = Polyline(np.arange(4.0), xy)
    a, b = Point2(ax, ay), Point2(bx, by)
    assert abs(dist_point_polyline(a, path) - dist_point_polyline(b, path)) <= a.dist(b) + 1e-9


def test_contains_closed_boundary():
    unit = DiskUnion.single((0.0, 0.0), 1.0)
    assert contains(unit, Point2(0.0, 0.0))
    assert contains(unit, Point2(1.0, 0.0))
    assert not contains(unit, Point2(1.0001, 0.0))


def test_union_distance_and_transforms():
    A = DiskUnion([Disk(Point2(0.0, 0.0), 1.0), Disk(Point2(10.0, 0.0), 2.0)])
    assert A.outer_radius == pytest.approx(12.0)
    assert A.distance(Point2(5.0, 0.0)) == pytest.approx(3.0)
    assert A.inflate(0.5).distance(Point2(5.0, 0.0)) == pytest.approx(2.5)
    B = A.scale(2.0).translate(Point2(1.0, 1.0))
    assert B.contains(Point2(21.0, 1.0))


def test_polyline_min_distance_to_union():
    path = Polyline(np.array([0.0, 1.0]), np.array([[-5.0, 3.0], [5.0, 3.0]]))
    A = DiskUnion([Disk(Point2(0.0, 0.0), 1.0), Disk(Point2(4.0, 2.5), 0.25)])
    assert polyline_min_distance_to_union(path, A) == pytest.approx(0.25)


def test_invalid_inputs_raise():
    with pytest.raises((GeometryError, ValueError)):
        Disk(Point2(0.0, 0.0), -1.0)
    with pytest.raises(GeometryError):
        DiskUnion([])
    with pytest.raises((GeometryError, ValueError)):
        PolarPoint(-1.0, 0.0)
