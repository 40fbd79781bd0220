import math

import numpy as np
import pytest

from rdwsim.agent import (
    ALIGN_TOL,
    PlannedPath,
    UnreachableTargetError,
    future_point_on_plan,
    plan_virtual_path,
    step_agent,
)
from rdwsim.environment import (
    Target,
    generate_virtual_space,
    sample_free_position,
    spawn_target,
)
from rdwsim.geometry import Vec2
from rdwsim import kernels
from tests.conftest import make_state, square_space

DT = 1.0 / 60.0


def test_plan_straight_line_when_visible():
    space = square_space(10.0, "virtual")
    path = plan_virtual_path(Vec2(0, 0), Target(Vec2(3, 0)), space)
    assert [(w.x, w.y) for w in path.waypoints] == [(0, 0), (3, 0)]


def test_plan_same_start_and_goal():
    space = square_space(10.0, "virtual")
    path = plan_virtual_path(Vec2(1, 1), Target(Vec2(1, 1)), space)
    assert len(path) == 1
    assert path.length() == 0.0


def test_plan_routes_around_wall():
    space = generate_virtual_space(np.random.default_rng(7))
    rng = np.random.default_rng(0)
    found = 0
    for _ in range(200):
        a = sample_free_position(rng, space, 0.7, navigable=True)
        t = spawn_target(rng, a, space)
        path = plan_virtual_path(a, t, space)
        straight = a.distance_to(t.position)
        assert path.length() >= straight - 1e-9
        if len(path) > 2:
            found += 1
            # every leg must clear the walls by at least the body radius
            for i in range(len(path) - 1):
                d = kernels.segment_min_dist_to_edges(
                    path.wx[i], path.wy[i], path.wx[i + 1], path.wy[i + 1], space.edges
                )
                assert d >= space.nav_radius - 1e-9
            assert path.length() > straight
        if found >= 10:
            break
    assert found >= 10


def test_plan_unreachable_raises():
    space = square_space(10.0, "virtual")
    with pytest.raises(UnreachableTargetError):
        plan_virtual_path(Vec2(0, 0), Target(Vec2(9.99, 9.99)), space)


def test_step_agent_walks_when_aligned():
    space = square_space(10.0, "virtual")
    path = plan_virtual_path(Vec2(0, 0), Target(Vec2(2, 0)), space)
    u = make_state(vpos=(0, 0), vh=0.0)
    cmd = step_agent(path, u, DT)
    assert cmd.dv == pytest.approx(1.0 / 60.0, abs=1e-12)
    assert cmd.dtheta == 0.0
    assert not cmd.reached


def test_step_agent_turns_in_place_when_off_heading():
    space = square_space(10.0, "virtual")
    path = plan_virtual_path(Vec2(0, 0), Target(Vec2(0, 2)), space)  # waypoint 90 deg left
    u = make_state(vpos=(0, 0), vh=0.0)
    cmd = step_agent(path, u, DT)
    assert cmd.dv == 0.0
    assert cmd.dtheta == pytest.approx(math.pi / 2 / 60.0, abs=1e-12)


def test_step_agent_flags_reached_within_collection_radius():
    space = square_space(10.0, "virtual")
    path = plan_virtual_path(Vec2(0, 0), Target(Vec2(2, 0), radius=0.2), space)
    u = make_state(vpos=(1.9, 0.0), vh=0.0)
    path.cursor = 1
    cmd = step_agent(path, u, DT)
    assert cmd.reached
    assert cmd.dv == 0.0 and cmd.dtheta == 0.0


def test_future_point_zero_horizon():
    space = square_space(10.0, "virtual")
    path = plan_virtual_path(Vec2(0, 0), Target(Vec2(5, 0)), space)
    u = make_state(vpos=(0, 0), vh=0.0)
    p = future_point_on_plan(path, u, 0.0, DT)
    assert (p.x, p.y) == (0.0, 0.0)


def test_future_point_straight_leg():
    space = square_space(10.0, "virtual")
    path = plan_virtual_path(Vec2(0, 0), Target(Vec2(8, 0)), space)
    u = make_state(vpos=(0, 0), vh=0.0)
    p = future_point_on_plan(path, u, 1.0, DT)
    assert p.x == pytest.approx(1.0, abs=1e-9)
    assert p.y == pytest.approx(0.0, abs=1e-12)


def test_future_point_spends_turn_time():
    # waypoint 90 degrees left: one second of turning at pi/2 rad/s, so the
    # agent barely moves (it may start walking in the last few aligned frames)
    space = square_space(10.0, "virtual")
    path = plan_virtual_path(Vec2(0, 0), Target(Vec2(0, 5)), space)
    u = make_state(vpos=(0, 0), vh=0.0)
    p = future_point_on_plan(path, u, 1.0, DT)
    assert p.distance_to(Vec2(0, 0)) <= 0.1


def test_future_point_clamps_to_path_end():
    space = square_space(10.0, "virtual")
    path = plan_virtual_path(Vec2(0, 0), Target(Vec2(2, 0)), space)
    u = make_state(vpos=(0, 0), vh=0.0)
    p = future_point_on_plan(path, u, 60.0, DT)
    assert p.distance_to(Vec2(2, 0)) < 1e-6


def test_future_point_semigroup():
    space = generate_virtual_space(np.random.default_rng(3))
    rng = np.random.default_rng(1)
    for _ in range(10):
        a = sample_free_position(rng, space, 0.7, navigable=True)
        t = spawn_target(rng, a, space)
        path = plan_virtual_path(a, t, space)
        u = make_state(vpos=(a.x, a.y), vh=float(rng.uniform(-math.pi, math.pi)))
        h1 = 30 * DT
        h2 = 45 * DT
        direct = future_point_on_plan(path, u, h1 + h2, DT)
        # simulate h1 then query h2 from the advanced state
        px, py, heading, cursor = kernels.policy_advance(
            a.x, a.y, u.virtual.heading, path.cursor, path.wx, path.wy,
            30, DT, u.linear_speed, u.angular_speed, ALIGN_TOL,
        )
        path2 = plan_virtual_path(a, t, space)
        path2.wx, path2.wy = path.wx, path.wy
        path2.cursor = int(cursor)
        u2 = make_state(vpos=(px, py), vh=heading)
        chained = future_point_on_plan(path2, u2, h2, DT)
        assert chained.distance_to(direct) < 1e-9


def test_future_point_does_not_mutate_state():
    space = square_space(10.0, "virtual")
    path = plan_virtual_path(Vec2(0, 0), Target(Vec2(5, 0)), space)
    u = make_state(vpos=(0, 0), vh=0.0)
    cursor_before = path.cursor
    future_point_on_plan(path, u, 2.0, DT)
    assert path.cursor == cursor_before
    assert u.virtual.position == Vec2(0, 0)


def test_path_following_keeps_clearance():
    # walking any planned path with identity gains never drops the virtual
    # clearance below the body radius
    for seed in (5, 6, 7):
        space = generate_virtual_space(np.random.default_rng(seed))
        rng = np.random.default_rng(seed + 100)
        a = sample_free_position(rng, space, 0.7, navigable=True)
        t = spawn_target(rng, a, space)
        path = plan_virtual_path(a, t, space)
        x, y, h, cursor = a.x, a.y, float(rng.uniform(-math.pi, math.pi)), 0
        for _ in range(30000):
            dv, dth, cursor, reached = kernels.policy_command(
                x, y, h, cursor, path.wx, path.wy, DT, 1.0, math.pi / 2, ALIGN_TOL
            )
            if reached:
                break
            h = kernels.wrap_angle(h + dth)
            x += dv * math.cos(h)
            y += dv * math.sin(h)
            assert space.clearance_xy(x, y) >= space.nav_radius - 0.02
        else:
            pytest.fail("agent did not reach the target")


def test_agent_reaches_target_within_time_bound():
    for seed in (11, 12):
        space = generate_virtual_space(np.random.default_rng(seed))
        rng = np.random.default_rng(seed)
        a = sample_free_position(rng, space, 0.7, navigable=True)
        t = spawn_target(rng, a, space)
        path = plan_virtual_path(a, t, space)
        u = make_state(vpos=(a.x, a.y), vh=float(rng.uniform(-math.pi, math.pi)))
        # bound: walk time + total possible turn time + 10%
        n_legs = len(path)
        bound = (path.length() / 1.0 + (n_legs + 1) * math.pi / (math.pi / 2)) * 1.1
        x, y, h, cursor = a.x, a.y, u.virtual.heading, 0
        elapsed = 0.0
        while elapsed < bound:
            dv, dth, cursor, reached = kernels.policy_command(
                x, y, h, cursor, path.wx, path.wy, DT, 1.0, math.pi / 2, ALIGN_TOL
            )
            if reached:
                break
            h = kernels.wrap_angle(h + dth)
            x += dv * math.cos(h)
            y += dv * math.sin(h)
            elapsed += DT
        assert elapsed < bound
