"""Simulated user: grid path planning around virtual walls and the per-frame
turn-then-walk motion policy.

Plans run A* on the 0.25 m navigation grid (inflated by the body radius) and
are then shortcut by line-of-sight smoothing using exact segment clearance, so
every leg keeps at least body_radius from all walls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .environment import SpaceMap, Target
from .geometry import Vec2
from .redirection import UserState

ALIGN_TOL = math.radians(5.0)
DEFAULT_DT = 1.0 / 60.0


class UnreachableTargetError(RuntimeError):
    """No collision-free grid path exists to the requested goal."""


@dataclass
class MotionCommand:
    dv: float
    dtheta: float
    reached: bool = False


class PlannedPath:
    """Waypoint polyline with a cursor marking the next waypoint to visit."""

    def __init__(self, waypoints: list[Vec2], goal_radius: float = 0.0):
        if not waypoints:
            raise ValueError("a path needs at least one waypoint")
        self.wx = np.array([w.x for w in waypoints], dtype=np.float64)
        self.wy = np.array([w.y for w in waypoints], dtype=np.float64)
        self.goal_radius = float(goal_radius)
        self.cursor = 0

    @property
    def waypoints(self) -> list[Vec2]:
        return [Vec2(x, y) for x, y in zip(self.wx, self.wy)]

    def __len__(self) -> int:
        return len(self.wx)

    @property
    def end(self) -> Vec2:
        return Vec2(self.wx[-1], self.wy[-1])

    def length(self) -> float:
        return float(np.sum(np.hypot(np.diff(self.wx), np.diff(self.wy))))


def _segment_clear(space: SpaceMap, a: Vec2, b: Vec2, radius: float) -> bool:
    d = kernels.segment_min_dist_to_edges(a.x, a.y, b.x, b.y, space.edges)
    return d >= radius


def plan_virtual_path(start: Vec2, target: Target, vspace: SpaceMap,
                      body_radius: float | None = None) -> PlannedPath:
    """Shortest grid path from start to the target position, smoothed.

    Raises UnreachableTargetError when no navigable route exists (target
    spawning guarantees this cannot happen during normal operation).
    """
    radius = vspace.nav_radius if body_radius is None else body_radius
    goal = target.position
    if start.distance_to(goal) <= kernels.WAYPOINT_EPS:
        return PlannedPath([start], target.radius)
    if _segment_clear(vspace, start, goal, radius):
        return PlannedPath([start, goal], target.radius)
    start_cell = vspace.nearest_nav_cell(start)
    if start_cell is None:
        raise UnreachableTargetError(f"start {start} is not near navigable space")
    gi, gj = vspace.cell_of(goal)
    cells = kernels.astar_grid(vspace.nav_mask, start_cell[0], start_cell[1], gi, gj)
    if cells.shape[0] == 0:
        raise UnreachableTargetError(f"no path from {start} to {goal}")
    points = [start]
    for i, j in cells:
        points.append(vspace.cell_center(int(i), int(j)))
    points.append(goal)
    return PlannedPath(_string_pull(vspace, points, radius), target.radius)


def _string_pull(space: SpaceMap, points: list[Vec2], radius: float) -> list[Vec2]:
    """Greedy line-of-sight shortcutting; keeps clearance >= radius per leg."""
    out = [points[0]]
    i = 0
    n = len(points)
    while i < n - 1:
        j = n - 1
        while j > i + 1 and not _segment_clear(space, points[i], points[j], radius):
            j -= 1
        out.append(points[j])
        i = j
    return out


def step_agent(path: PlannedPath, u: UserState, dt: float) -> MotionCommand:
    """One frame of the policy: rotate toward the next waypoint until within
    ALIGN_TOL, then walk; advances the path cursor.  Flags reached once the
    final waypoint is within the path's goal radius.
    """
    pos = u.virtual.position
    if path.cursor >= len(path) - 1 and pos.distance_to(path.end) <= path.goal_radius:
        path.cursor = len(path)
        return MotionCommand(0.0, 0.0, reached=True)
    dv, dtheta, cursor, reached = kernels.policy_command(
        pos.x, pos.y, u.virtual.heading, path.cursor, path.wx, path.wy,
        dt, u.linear_speed, u.angular_speed, ALIGN_TOL,
    )
    path.cursor = int(cursor)
    return MotionCommand(float(dv), float(dtheta), bool(reached))


def future_point_on_plan(path: PlannedPath, u: UserState, horizon: float,
                         dt: float = DEFAULT_DT) -> Vec2:
    """Virtual position after following the remaining plan for horizon seconds.

    Simulates the same per-frame policy as step_agent (in dt frames plus one
    fractional step), clamped to the path end; never mutates path or state.
    """
    if horizon < 0.0:
        raise ValueError("horizon must be non-negative")
    n_full = int(math.floor(horizon / dt + 1e-12))
    px, py, heading, cursor = kernels.policy_advance(
        u.virtual.position.x, u.virtual.position.y, u.virtual.heading,
        path.cursor, path.wx, path.wy, n_full, dt,
        u.linear_speed, u.angular_speed, ALIGN_TOL,
    )
    rem = horizon - n_full * dt
    if rem > 1e-12:
        dv, dtheta, cursor, reached = kernels.policy_command(
            px, py, heading, cursor, path.wx, path.wy,
            rem, u.linear_speed, u.angular_speed, ALIGN_TOL,
        )
        if not reached:
            heading = kernels.wrap_angle(heading + dtheta)
            px += dv * math.cos(heading)
            py += dv * math.sin(heading)
    return Vec2(px, py)
