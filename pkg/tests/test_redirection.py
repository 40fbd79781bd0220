import math

import numpy as np
import pytest

from rdwsim.environment import SpaceMap
from rdwsim.geometry import Polygon, Vec2
from rdwsim.redirection import (
    GR_MAX,
    GR_MIN,
    GT_MAX,
    GT_MIN,
    MIN_CURVATURE_RADIUS,
    Gains,
    Pose,
    UnrecoverablePoseError,
    UserState,
    apply_redirection,
    check_reset,
    clamp_gains,
    execute_reset,
)
from tests.conftest import make_state


def test_pose_heading_normalized():
    p = Pose(Vec2(0, 0), 3 * math.pi)
    assert -math.pi < p.heading <= math.pi
    assert p.heading == pytest.approx(math.pi, abs=1e-12)
    q = Pose(Vec2(0, 0), 0.5)
    assert q.heading == 0.5  # in-range headings unchanged bit-for-bit


def test_userstate_validation():
    with pytest.raises(ValueError):
        UserState(Pose(Vec2(0, 0), 0), Pose(Vec2(0, 0), 0), body_radius=0.0)
    with pytest.raises(ValueError):
        UserState(Pose(Vec2(0, 0), 0), Pose(Vec2(0, 0), 0), linear_speed=-1.0)


# -- clamp_gains --------------------------------------------------------------


def test_clamp_translation_gain():
    g = clamp_gains(Gains(g_t=1.5))
    assert g.g_t == GT_MAX == 1.26


def test_clamp_identity_inside_range():
    g = Gains(1.0, 1.0, math.inf, 0)
    assert clamp_gains(g) is g


def test_clamp_curvature_radius_floor():
    g = clamp_gains(Gains(curvature_radius=5.0, curvature_sign=1))
    assert g.curvature_radius == MIN_CURVATURE_RADIUS == 7.5


def test_clamp_all_bounds():
    g = clamp_gains(Gains(0.1, 9.0, 1.0, 1))
    assert (g.g_t, g.g_r, g.curvature_radius) == (GT_MIN, GR_MAX, 7.5)
    g = clamp_gains(Gains(9.0, 0.1, math.inf, 0))
    assert (g.g_t, g.g_r) == (GT_MAX, GR_MIN)


# -- apply_redirection --------------------------------------------------------


def test_apply_identity_gains_walks_straight():
    u = make_state()
    out = apply_redirection(u, 1.0, 0.0, Gains(), 1.0 / 60)
    assert out.physical.position.x == pytest.approx(1.0, abs=1e-12)
    assert out.physical.position.y == pytest.approx(0.0, abs=1e-12)
    assert out.virtual.position.x == pytest.approx(1.0, abs=1e-12)


def test_apply_curvature_drift():
    u = make_state()
    g = Gains(1.0, 1.0, 7.5, 1)
    out = apply_redirection(u, 1.0, 0.0, g, 1.0 / 60)
    assert out.physical.heading == pytest.approx(1.0 / 7.5, abs=1e-12)
    assert out.virtual.heading == 0.0


def test_apply_translation_gain():
    u = make_state()
    out = apply_redirection(u, 1.0, 0.0, Gains(g_t=1.26), 1.0 / 60)
    dist = out.physical.position.distance_to(Vec2(0, 0))
    assert dist == pytest.approx(1.0 / 1.26, abs=1e-9)
    assert out.virtual.position.x == pytest.approx(1.0, abs=1e-12)


def test_apply_rejects_negative_dv():
    with pytest.raises(ValueError):
        apply_redirection(make_state(), -0.1, 0.0, Gains(), 1.0 / 60)


def test_gain_identity_congruence():
    # with identity gains the physical trajectory is a rigid copy of the virtual
    rng = np.random.default_rng(5)
    u = make_state(vpos=(1.0, 2.0), vh=0.3, ppos=(-0.5, 0.7), ph=-1.1)
    vpts = [u.virtual.position]
    ppts = [u.physical.position]
    for _ in range(200):
        dv = float(rng.uniform(0, 0.02))
        dth = float(rng.uniform(-0.03, 0.03))
        u = apply_redirection(u, dv, dth, Gains(), 1.0 / 60)
        vpts.append(u.virtual.position)
        ppts.append(u.physical.position)
    for i in range(0, 200, 17):
        for j in range(i + 1, 201, 23):
            dv_ij = vpts[i].distance_to(vpts[j])
            dp_ij = ppts[i].distance_to(ppts[j])
            assert dp_ij == pytest.approx(dv_ij, abs=1e-9)


def test_curvature_consistency_compounded():
    # walking D straight at constant radius turns the physical heading by
    # exactly D / (g_t * r), compounded per frame
    g = Gains(1.1, 1.0, 7.5, -1)
    u = make_state()
    dt = 1.0 / 60
    d_total = 0.0
    while d_total < 10.0 - 1e-9:
        u = apply_redirection(u, 1.0 * dt, 0.0, g, dt)
        d_total += 1.0 * dt
    expected = -d_total / (1.1 * 7.5)
    assert u.physical.heading == pytest.approx(expected, abs=1e-6)


# -- reset detection and execution ---------------------------------------------


def test_check_reset_false_at_center(e1):
    assert not check_reset(make_state(), e1)


def test_check_reset_boundary_case(e1):
    assert check_reset(make_state(ppos=(1.5, 0.0)), e1)


def test_check_reset_e3_obstacle(e3):
    assert check_reset(make_state(ppos=(0.0, 2.49)), e3)
    assert not check_reset(make_state(ppos=(0.0, 2.51)), e3)


def test_execute_reset_r2c_turns_to_center(e1):
    u = make_state(ppos=(1.9, 0.0), ph=0.0, vpos=(3.3, 4.4), vh=0.9)
    out, event = execute_reset(u, e1, time=12.0, virtual_distance=34.5)
    assert out.physical.heading == pytest.approx(math.pi, abs=1e-12)
    assert out.physical.position == u.physical.position
    assert out.virtual == u.virtual  # virtual pose untouched
    assert event.time == 12.0
    assert event.virtual_distance_at_event == 34.5
    assert event.physical_position == Vec2(1.9, 0.0)


def test_execute_reset_blocked_center_picks_clear_direction(e3):
    # center ray from just above the central obstacle is blocked; the chosen
    # direction must be walkable, roughly tangential, with a long forward ray
    u = make_state(ppos=(0.0, 2.4), ph=math.pi / 2)
    out, _ = execute_reset(u, e3)
    h = out.physical.heading
    assert abs(abs(h) - math.pi / 2) > 0.5  # not straight up/down into walls
    assert e3.raycast_xy(0.0, 2.4, h, math.inf) > u.body_radius


def test_execute_reset_forward_ray_exceeds_body_radius(e1, e3, e4):
    rng = np.random.default_rng(8)
    for space in (e1, e3, e4):
        for _ in range(60):
            x, y = rng.uniform(*zip(*[(lo + 0.05, hi - 0.05) for lo, hi in
                                      [(space.boundary.bbox[0], space.boundary.bbox[2]),
                                       (space.boundary.bbox[1], space.boundary.bbox[3])]]))
            p = Vec2(float(x), float(y))
            c = space.clearance(p)
            if not (0.05 < c <= 0.5):
                continue
            u = make_state(ppos=(p.x, p.y), ph=float(rng.uniform(-math.pi, math.pi)))
            out, _ = execute_reset(u, space)
            ray = space.raycast_xy(p.x, p.y, out.physical.heading, math.inf)
            assert ray > u.body_radius


def test_execute_reset_unrecoverable():
    b = Polygon([Vec2(-0.3, -0.3), Vec2(0.3, -0.3), Vec2(0.3, 0.3), Vec2(-0.3, 0.3)])
    tiny = SpaceMap(b, (), "physical", nav_radius=0.1)
    u = make_state(ppos=(0.0, 0.0))
    with pytest.raises(UnrecoverablePoseError):
        execute_reset(u, tiny)
