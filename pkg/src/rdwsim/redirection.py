"""Gain kinematics mapping virtual motion onto physical motion, detection
threshold clamps, reset detection and the reset-to-center reorientation.

Threshold values follow the standard perception-study bounds used by the
reactive steering literature; all are overridable through the run config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .environment import SpaceMap
from .geometry import Vec2, wrap_angle

GT_MIN, GT_MAX = 0.86, 1.26
GR_MIN, GR_MAX = 0.67, 1.24
MIN_CURVATURE_RADIUS = 7.5

DEFAULT_LINEAR_SPEED = 1.0
DEFAULT_ANGULAR_SPEED = math.pi / 2.0

# a reset re-orients toward the room center unless that ray is blocked nearby
R2C_CLEAR_DISTANCE = 1.0
R2C_SCAN_STEPS = 72  # 5 degree sampling
R2C_SWEEP_STEP = 0.25
R2C_SWEEP_RANGE = 3.0


class UnrecoverablePoseError(RuntimeError):
    """No reset direction offers more clearance than the body radius."""


def _normalize_heading(h: float) -> float:
    if not (-math.pi < h <= math.pi):
        h = wrap_angle(h)
    return h


@dataclass(frozen=True)
class Pose:
    position: Vec2
    heading: float  # radians in (-pi, pi]

    def __post_init__(self):
        object.__setattr__(self, "heading", _normalize_heading(self.heading))

    def forward(self) -> Vec2:
        return Vec2.unit(self.heading)


@dataclass
class UserState:
    """Paired virtual/physical poses plus the frame's kinematics.

    linear_speed and angular_speed are the nominal walking capabilities
    (magnitudes); frame_dv and frame_dtheta describe the virtual motion
    command being executed this frame (frame_dtheta is signed).
    """

    virtual: Pose
    physical: Pose
    linear_speed: float = DEFAULT_LINEAR_SPEED
    angular_speed: float = DEFAULT_ANGULAR_SPEED
    body_radius: float = 0.5
    frame_dv: float = 0.0
    frame_dtheta: float = 0.0

    def __post_init__(self):
        if self.body_radius <= 0.0:
            raise ValueError("body_radius must be positive")
        if self.linear_speed < 0.0 or self.angular_speed < 0.0:
            raise ValueError("speeds must be non-negative")


@dataclass(frozen=True)
class Gains:
    g_t: float = 1.0
    g_r: float = 1.0
    curvature_radius: float = math.inf
    curvature_sign: int = 0  # +1 bends the physical path left, -1 right


@dataclass(frozen=True)
class ResetEvent:
    time: float
    physical_position: Vec2
    virtual_distance_at_event: float


def clamp_gains(g: Gains) -> Gains:
    g_t = min(max(g.g_t, GT_MIN), GT_MAX)
    g_r = min(max(g.g_r, GR_MIN), GR_MAX)
    radius = g.curvature_radius
    if radius < MIN_CURVATURE_RADIUS:
        radius = MIN_CURVATURE_RADIUS
    sign = g.curvature_sign
    if sign not in (-1, 0, 1):
        sign = 1 if sign > 0 else -1
    if g_t == g.g_t and g_r == g.g_r and radius == g.curvature_radius and sign == g.curvature_sign:
        return g
    return Gains(g_t, g_r, radius, sign)


def advance_headings(vh: float, ph: float, dv: float, dtheta_v: float,
                     g: Gains) -> tuple[float, float, float]:
    """Shared kinematic core: returns (new vh, new ph, physical step dp).

    Rotation is applied before translation each frame: the virtual heading
    turns by dtheta_v, the physical one by dtheta_v / g_r plus the curvature
    drift sign * dp / radius, then both positions move along the new headings.
    """
    dp = dv / g.g_t
    drift = 0.0
    if g.curvature_sign != 0 and math.isfinite(g.curvature_radius):
        drift = g.curvature_sign * dp / g.curvature_radius
    vh = wrap_angle(vh + dtheta_v)
    ph = wrap_angle(ph + dtheta_v / g.g_r + drift)
    return vh, ph, dp


def apply_redirection(u: UserState, dv: float, dtheta_v: float, g: Gains,
                      dt: float) -> UserState:
    """Advance the paired poses by one virtual motion command under gains g."""
    if dv < 0.0:
        raise ValueError("dv must be non-negative")
    vh, ph, dp = advance_headings(u.virtual.heading, u.physical.heading, dv, dtheta_v, g)
    vpos = Vec2(u.virtual.position.x + dv * math.cos(vh),
                u.virtual.position.y + dv * math.sin(vh))
    ppos = Vec2(u.physical.position.x + dp * math.cos(ph),
                u.physical.position.y + dp * math.sin(ph))
    return replace(
        u,
        virtual=Pose(vpos, vh),
        physical=Pose(ppos, ph),
        frame_dv=dv,
        frame_dtheta=dtheta_v,
    )


def check_reset(u: UserState, physical: SpaceMap) -> bool:
    """True when the body disc touches a wall: clearance <= body_radius."""
    return physical.clearance(u.physical.position) <= u.body_radius


def reset_heading(position: Vec2, current_heading: float, body_radius: float,
                  physical: SpaceMap) -> float:
    """Reset-to-center heading choice.

    Points toward the room center when that ray is clear for more than
    R2C_CLEAR_DISTANCE (and than the body radius); otherwise picks the
    direction of maximum raycast clearance over R2C_SCAN_STEPS samples,
    breaking ties by the smaller turn from the current heading (left
    preferred on exact ties).
    """
    # direction quality is judged by sweeping the body disc, not by a bare
    # raycast: a long ray down a gap narrower than the body (or one grazing an
    # obstacle corner) would send the user skimming a wall and re-trigger a
    # reset every frame
    from . import kernels  # local import avoids a cycle at module load

    edges, bvx, bvy, ovx, ovy, ooff = physical.kernel_args

    def sweep_min(angle: float) -> float:
        return kernels.sweep_min_clearance(
            position.x, position.y, angle, edges, bvx, bvy, ovx, ovy, ooff,
            R2C_SWEEP_STEP, R2C_SWEEP_RANGE,
        )

    center = physical.center()
    to_center = center - position
    if to_center.norm() > 1e-9:
        heading = to_center.angle()
        ray = physical.raycast_xy(position.x, position.y, heading, math.inf)
        if ray > R2C_CLEAR_DISTANCE and ray > body_radius and sweep_min(heading) >= body_radius:
            return heading
    # fall back to the direction whose sweep keeps the most clearance,
    # breaking ties by the smaller turn (left preferred on exact ties)
    step = 2.0 * math.pi / R2C_SCAN_STEPS
    best_key = (-math.inf, -math.inf, 0.0)
    best_off = 0.0
    max_ray = -math.inf
    for k in range(R2C_SCAN_STEPS):
        off = wrap_angle(k * step)
        ang = wrap_angle(current_heading + off)
        ray = physical.raycast_xy(position.x, position.y, ang, math.inf)
        if ray > max_ray:
            max_ray = ray
        key = (sweep_min(ang), -abs(off), off)
        if key > best_key:
            best_key = key
            best_off = off
    if max_ray <= body_radius:
        raise UnrecoverablePoseError(
            f"no reset direction with clearance > {body_radius} at {position}"
        )
    return wrap_angle(current_heading + best_off)


def execute_reset(u: UserState, physical: SpaceMap, time: float = 0.0,
                  virtual_distance: float = 0.0) -> tuple[UserState, ResetEvent]:
    """Instant in-place reorientation; the virtual pose is untouched."""
    heading = reset_heading(u.physical.position, u.physical.heading, u.body_radius, physical)
    new_state = replace(u, physical=Pose(u.physical.position, heading))
    event = ResetEvent(time, u.physical.position, virtual_distance)
    return new_state, event
