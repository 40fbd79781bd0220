import math

import numpy as np
import pytest
from shapely.geometry import LineString, Point
from shapely.geometry import Polygon as ShapelyPolygon

from rdwsim.geometry import (
    OutsideFreeSpaceError,
    Polygon,
    Segment,
    Vec2,
    distance_point_segment,
    min_clearance,
    point_in_polygon,
    raycast,
)
from tests.conftest import random_scene, square_space


# -- independent oracles ------------------------------------------------------


def brute_force_point_segment(p, a, b, n=1_000_000):
    t = np.linspace(0.0, 1.0, n)
    xs = a[0] + t * (b[0] - a[0])
    ys = a[1] + t * (b[1] - a[1])
    return float(np.min(np.hypot(p[0] - xs, p[1] - ys)))


def shapely_raycast(origin, direction, space, max_range):
    ray = LineString([
        (origin.x, origin.y),
        (origin.x + direction.x * max_range, origin.y + direction.y * max_range),
    ])
    best = max_range
    for e in space.edges:
        inter = ray.intersection(LineString([(e[0], e[1]), (e[2], e[3])]))
        if inter.is_empty:
            continue
        for g in getattr(inter, "geoms", [inter]):
            for c in g.coords:
                d = math.hypot(c[0] - origin.x, c[1] - origin.y)
                best = min(best, d)
    return best


def shapely_clearance(p, space):
    if not ShapelyPolygon([(v.x, v.y) for v in space.boundary.vertices]).covers(Point(p.x, p.y)):
        return 0.0
    for obs in space.obstacles:
        if ShapelyPolygon([(v.x, v.y) for v in obs.vertices]).covers(Point(p.x, p.y)):
            return 0.0
    return min(
        Point(p.x, p.y).distance(LineString([(e[0], e[1]), (e[2], e[3])]))
        for e in space.edges
    )


# -- types --------------------------------------------------------------------


def test_vec2_rejects_non_finite():
    with pytest.raises(ValueError):
        Vec2(math.nan, 0.0)
    with pytest.raises(ValueError):
        Vec2(0.0, math.inf)


def test_segment_rejects_degenerate():
    with pytest.raises(ValueError):
        Segment(Vec2(1, 1), Vec2(1, 1))


def test_polygon_validation():
    with pytest.raises(ValueError):
        Polygon([Vec2(0, 0), Vec2(1, 0)])
    with pytest.raises(ValueError):  # bow-tie
        Polygon([Vec2(0, 0), Vec2(1, 1), Vec2(1, 0), Vec2(0, 1)])
    cw = Polygon([Vec2(0, 0), Vec2(0, 1), Vec2(1, 1), Vec2(1, 0)])
    assert cw.area > 0  # winding normalized to CCW


# -- distance_point_segment ---------------------------------------------------


def test_distance_perpendicular_foot():
    s = Segment(Vec2(-1, 0), Vec2(1, 0))
    assert distance_point_segment(Vec2(0, 1), s) == pytest.approx(1.0, abs=1e-12)


def test_distance_nearest_endpoint():
    s = Segment(Vec2(-1, 0), Vec2(1, 0))
    assert distance_point_segment(Vec2(2, 0), s) == pytest.approx(1.0, abs=1e-12)


def test_distance_short_segment_vs_brute_force():
    s = Segment(Vec2(0, 0), Vec2(0, 0.001))
    got = distance_point_segment(Vec2(3, 4), s)
    oracle = brute_force_point_segment((3, 4), (0, 0), (0, 0.001))
    assert got == pytest.approx(oracle, abs=1e-3)
    assert got == pytest.approx(5.0, abs=1e-3)


def test_distance_random_vs_shapely():
    rng = np.random.default_rng(3)
    for _ in range(300):
        a = rng.uniform(-5, 5, 2)
        b = rng.uniform(-5, 5, 2)
        if np.allclose(a, b):
            continue
        p = rng.uniform(-6, 6, 2)
        got = distance_point_segment(Vec2(*p), Segment(Vec2(*a), Vec2(*b)))
        want = Point(p).distance(LineString([tuple(a), tuple(b)]))
        assert got == pytest.approx(want, abs=1e-9)


# -- raycast ------------------------------------------------------------------


def test_raycast_empty_square_axis(e1):
    assert raycast(Vec2(0, 0), Vec2(1, 0), e1, 100.0) == pytest.approx(2.0, abs=1e-12)


def test_raycast_empty_square_diagonal(e1):
    d = Vec2(1, 1).normalized()
    assert raycast(Vec2(0, 0), d, e1, 100.0) == pytest.approx(2 * math.sqrt(2), abs=1e-9)


def test_raycast_e3_hits_central_obstacle(e3):
    got = raycast(Vec2(-4, 0), Vec2(1, 0), e3, 100.0)
    oracle = shapely_raycast(Vec2(-4, 0), Vec2(1, 0), e3, 100.0)
    assert got == pytest.approx(oracle, abs=1e-9)
    assert got == pytest.approx(2.0, abs=1e-12)


def test_raycast_requires_unit_direction(e1):
    with pytest.raises(ValueError):
        raycast(Vec2(0, 0), Vec2(2, 0), e1, 10.0)


def test_raycast_outside_free_space_rejected(e3):
    with pytest.raises(OutsideFreeSpaceError):
        raycast(Vec2(0, 0), Vec2(1, 0), e3, 10.0)  # inside the central obstacle


def test_raycast_max_range_cap(e2):
    assert raycast(Vec2(0, 0), Vec2(1, 0), e2, 3.0) == 3.0


def test_raycast_random_scenes_vs_oracle():
    rng = np.random.default_rng(11)
    for i in range(40):
        space = random_scene(rng)
        for _ in range(25):
            p = Vec2(*rng.uniform(-2, 2, 2))
            if not space.in_free_space(p):
                continue
            ang = rng.uniform(-math.pi, math.pi)
            d = Vec2.unit(ang)
            got = raycast(p, d, space, 50.0)
            want = shapely_raycast(p, d, space, 50.0)
            assert got == pytest.approx(want, abs=1e-9)


def test_raycast_rigid_motion_equivariance():
    rng = np.random.default_rng(17)
    base = square_space(4.0)
    for _ in range(50):
        p = Vec2(*rng.uniform(-3, 3, 2))
        ang = rng.uniform(-math.pi, math.pi)
        got = raycast(p, Vec2.unit(ang), base, 100.0)
        # transform scene and query by a random rigid motion
        theta = rng.uniform(-math.pi, math.pi)
        t = Vec2(*rng.uniform(-10, 10, 2))
        verts = [v.rotated(theta) + t for v in base.boundary.vertices]
        from rdwsim.environment import SpaceMap

        moved = SpaceMap(Polygon(verts), (), "physical")
        got2 = raycast(p.rotated(theta) + t, Vec2.unit(ang + theta), moved, 100.0)
        assert got2 == pytest.approx(got, abs=1e-9)


# -- min_clearance ------------------------------------------------------------


def test_clearance_center(e1):
    assert min_clearance(Vec2(0, 0), e1) == pytest.approx(2.0, abs=1e-12)


def test_clearance_near_wall(e1):
    assert min_clearance(Vec2(1.5, 0), e1) == pytest.approx(0.5, abs=1e-12)


def test_clearance_e3_obstacle_top(e3):
    got = min_clearance(Vec2(0, 2.5), e3)
    oracle = shapely_clearance(Vec2(0, 2.5), e3)
    assert got == pytest.approx(oracle, abs=1e-9)
    assert got == pytest.approx(0.5, abs=1e-12)


def test_clearance_outside_reports_zero(e1):
    assert min_clearance(Vec2(10, 10), e1) == 0.0


def test_clearance_is_1_lipschitz():
    rng = np.random.default_rng(23)
    for i in range(20):
        space = random_scene(rng)
        pts = rng.uniform(-8, 8, (40, 2))
        for k in range(0, 40, 2):
            p = Vec2(*pts[k])
            q = Vec2(*pts[k + 1])
            dc = abs(min_clearance(p, space) - min_clearance(q, space))
            assert dc <= p.distance_to(q) + 1e-9


def test_clearance_random_vs_shapely():
    rng = np.random.default_rng(29)
    for i in range(20):
        space = random_scene(rng)
        for _ in range(20):
            p = Vec2(*rng.uniform(-8, 8, 2))
            assert min_clearance(p, space) == pytest.approx(
                shapely_clearance(p, space), abs=1e-9
            )


# -- point_in_polygon ---------------------------------------------------------


def test_pip_center_inside():
    sq = Polygon([Vec2(-0.5, -0.5), Vec2(0.5, -0.5), Vec2(0.5, 0.5), Vec2(-0.5, 0.5)])
    assert point_in_polygon(Vec2(0, 0), sq)


def test_pip_far_outside():
    sq = Polygon([Vec2(-0.5, -0.5), Vec2(0.5, -0.5), Vec2(0.5, 0.5), Vec2(-0.5, 0.5)])
    assert not point_in_polygon(Vec2(5, 5), sq)


def test_pip_vertex_counts_inside():
    sq = Polygon([Vec2(-0.5, -0.5), Vec2(0.5, -0.5), Vec2(0.5, 0.5), Vec2(-0.5, 0.5)])
    assert point_in_polygon(Vec2(0.5, 0.5), sq)
    assert point_in_polygon(Vec2(0.0, 0.5), sq)  # edge midpoint


def test_pip_random_vs_shapely():
    rng = np.random.default_rng(31)
    for _ in range(30):
        n = int(rng.integers(3, 8))
        angles = np.sort(rng.uniform(0, 2 * math.pi, n))
        radii = rng.uniform(0.5, 3.0, n)
        verts = [Vec2(r * math.cos(a), r * math.sin(a)) for r, a in zip(radii, angles)]
        try:
            poly = Polygon(verts)
        except ValueError:
            continue
        shp = ShapelyPolygon([(v.x, v.y) for v in poly.vertices])
        for _ in range(40):
            p = rng.uniform(-3.5, 3.5, 2)
            if shp.exterior.distance(Point(*p)) < 1e-7:
                continue  # both conventions agree only away from the boundary
            assert point_in_polygon(Vec2(*p), poly) == shp.contains(Point(*p))
