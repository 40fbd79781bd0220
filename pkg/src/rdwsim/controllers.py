"""Redirection controllers: steer-to-center, potential-field and alignment
steering plus the curvature-action tree search, each in a vanilla form and a
future-fused form that blends in a predicted future position with weight mu.

The future position is always interpreted as an overlay: the predicted
virtual displacement, rotated by the current physical-minus-virtual heading
offset and anchored at the current physical position.  Overlays falling
outside the physical boundary are projected onto the boundary inset by the
body radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from . import kernels
from .environment import SpaceMap, project_into_boundary
from .geometry import Vec2, wrap_angle
from .predictor import DirectionProbs, Prediction
from .redirection import (
    GR_MAX,
    GR_MIN,
    GT_MAX,
    GT_MIN,
    MIN_CURVATURE_RADIUS,
    Gains,
    Pose,
    UserState,
)

STEER_DEAD_ZONE = math.radians(2.0)
FORCE_EPS = 1e-9

ARC_RAY_RANGE = 10.0
ARC_SATURATION_ML = 0.5  # misalignment at which curvature saturates
ARC_MIN_FRONT_DIST = 0.1  # floor for a zero virtual front distance
# below this predicted displacement the future body direction is meaningless
# (error scale dominates); fall back to the current headings
ARC_MIN_DISPLACEMENT = 0.1

MPC_SEGMENT_LENGTH = 1.0
MPC_SUB_STEP = 0.25
MPC_RESET_COST = 1000.0
MPC_CURVATURE_PENALTY = 0.1
MPC_DEPTH = 4
MPC_ALPHA = 0.8

CONTROLLER_NAMES = (
    "s2c",
    "f-s2c",
    "tapf",
    "f-tapf",
    "arc",
    "f-arc",
    "mpcred",
    "f-mpcred",
)

VANILLA_OF = {"f-s2c": "s2c", "f-tapf": "tapf", "f-arc": "arc", "f-mpcred": "mpcred"}
DEFAULT_MU = {"f-s2c": 0.5, "f-tapf": 0.7, "f-arc": 0.5}


@dataclass(frozen=True)
class FusionWeight:
    mu: float

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must be in [0, 1]")


def _mu_value(mu) -> float:
    return mu.mu if isinstance(mu, FusionWeight) else float(mu)


class MpcAction(Enum):
    NONE = "none"
    CURVATURE_LEFT = "curvature_left"
    CURVATURE_RIGHT = "curvature_right"


_ACTION_BY_CODE = (MpcAction.NONE, MpcAction.CURVATURE_LEFT, MpcAction.CURVATURE_RIGHT)
_CODE_BY_ACTION = {a: i for i, a in enumerate(_ACTION_BY_CODE)}


@dataclass(frozen=True)
class SteeringDecision:
    gains: Gains
    target_dir: Optional[Vec2] = None
    force: Optional[Vec2] = None
    misalign_current: Optional[float] = None
    misalign_future: Optional[float] = None
    future_overlay: Optional[Vec2] = None


NEUTRAL_DECISION = SteeringDecision(Gains())


def overlay_future_position(u: UserState, pred: Prediction, physical: SpaceMap) -> Vec2:
    """Predicted virtual displacement re-anchored at the physical pose.

    Overlays outside the boundary are projected onto the boundary inset by the
    body radius; overlays inside an internal obstacle are pulled back along
    the line toward the user until the body fits, so downstream force /
    raycast queries see the reachable shadow of the prediction instead of a
    point buried in a wall.
    """
    delta = pred.future_virtual_position - u.virtual.position
    shifted = delta.rotated(u.physical.heading - u.virtual.heading)
    p = Vec2(u.physical.position.x + shifted.x, u.physical.position.y + shifted.y)
    if not physical.boundary.contains(p):
        p = project_into_boundary(physical, p, u.body_radius)
    if physical.obstacles:
        anchor = u.physical.position
        floor = min(u.body_radius, physical.clearance(anchor)) - 1e-9
        if physical.clearance(p) < floor:
            lo, hi = 0.0, 1.0  # lo: at p (blocked), hi: at the user (free)
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                q = Vec2(p.x + (anchor.x - p.x) * mid, p.y + (anchor.y - p.y) * mid)
                if physical.clearance(q) >= floor:
                    hi = mid
                else:
                    lo = mid
            p = Vec2(p.x + (anchor.x - p.x) * hi, p.y + (anchor.y - p.y) * hi)
    return p


def steer_to_target(u: UserState, target_dir: Vec2, g_t: float = 1.0,
                    **debug) -> SteeringDecision:
    """Maximum curvature toward target_dir with a 2 degree dead zone.

    The rotation gain amplifies rotation toward the target (GR_MAX) and damps
    rotation away from it (GR_MIN); 1.0 while not rotating.
    """
    ang = wrap_angle(target_dir.angle() - u.physical.heading)
    if abs(ang) < STEER_DEAD_ZONE:
        sign = 0
        radius = math.inf
    else:
        sign = 1 if ang > 0.0 else -1
        radius = MIN_CURVATURE_RADIUS
    if u.frame_dtheta == 0.0:
        g_r = 1.0
    elif u.frame_dtheta * ang > 0.0:
        g_r = GR_MAX
    else:
        g_r = GR_MIN
    return SteeringDecision(Gains(g_t, g_r, radius, sign), target_dir=target_dir, **debug)


# ---------------------------------------------------------------------------
# steer-to-center family
# ---------------------------------------------------------------------------


def s2c(u: UserState, physical: SpaceMap) -> SteeringDecision:
    center = physical.center()
    d_c = center - u.physical.position
    if d_c.norm() <= FORCE_EPS:
        return NEUTRAL_DECISION  # at the center the direction is undefined
    return steer_to_target(u, d_c.normalized())


def f_s2c(u: UserState, pred: Prediction, mu, physical: SpaceMap) -> SteeringDecision:
    m = _mu_value(mu)
    center = physical.center()
    overlay = overlay_future_position(u, pred, physical)
    d_c = center - u.physical.position
    d_f = center - overlay
    r = Vec2(d_f.x * m + d_c.x * (1.0 - m), d_f.y * m + d_c.y * (1.0 - m))
    if r.norm() <= FORCE_EPS:
        return SteeringDecision(Gains(), future_overlay=overlay)
    return steer_to_target(u, r.normalized(), future_overlay=overlay)


# ---------------------------------------------------------------------------
# potential-field family
# ---------------------------------------------------------------------------


def compute_tapf_force(p: Vec2, physical: SpaceMap) -> Vec2:
    """Resultant repulsive force from all edges, sampled every 0.25 m with
    inverse-square falloff."""
    fx, fy = kernels.apf_force(p.x, p.y, physical.apf_sx, physical.apf_sy, physical.apf_w)
    return Vec2(fx, fy)


def _apf_decision(u: UserState, net: Vec2, overlay: Optional[Vec2]) -> SteeringDecision:
    if net.norm() < FORCE_EPS:
        return SteeringDecision(Gains(), force=net, future_overlay=overlay)
    # slow physical translation when walking against the force, speed it up along
    heading_dot = math.cos(u.physical.heading) * net.x + math.sin(u.physical.heading) * net.y
    if heading_dot < 0.0:
        g_t = GT_MAX
    elif heading_dot > 0.0:
        g_t = GT_MIN
    else:
        g_t = 1.0
    return steer_to_target(u, net.normalized(), g_t=g_t, force=net, future_overlay=overlay)


def tapf(u: UserState, physical: SpaceMap) -> SteeringDecision:
    force_c = compute_tapf_force(u.physical.position, physical)
    return _apf_decision(u, force_c, None)


def f_tapf(u: UserState, pred: Prediction, mu, physical: SpaceMap) -> SteeringDecision:
    m = _mu_value(mu)
    force_c = compute_tapf_force(u.physical.position, physical)
    overlay = overlay_future_position(u, pred, physical)
    force_f = compute_tapf_force(overlay, physical)
    net = Vec2(force_f.x * m + force_c.x * (1.0 - m), force_f.y * m + force_c.y * (1.0 - m))
    return _apf_decision(u, net, overlay)


# ---------------------------------------------------------------------------
# alignment family
# ---------------------------------------------------------------------------


def _ray3(space: SpaceMap, pose: Pose) -> tuple[float, float, float]:
    x, y, h = pose.position.x, pose.position.y, pose.heading
    return (
        space.raycast_xy(x, y, h, ARC_RAY_RANGE),
        space.raycast_xy(x, y, wrap_angle(h + 0.5 * math.pi), ARC_RAY_RANGE),
        space.raycast_xy(x, y, wrap_angle(h - 0.5 * math.pi), ARC_RAY_RANGE),
    )


def compute_misalign(v_pose: Pose, p_pose: Pose, vspace: SpaceMap,
                     pspace: SpaceMap) -> tuple[float, tuple[float, ...]]:
    """Front/left/right raycast distances in both spaces (capped at 10 m) and
    the summed absolute differences.  Returns (ml, (dpf, dpl, dpr, dvf, dvl, dvr))."""
    d_p = _ray3(pspace, p_pose)
    d_v = _ray3(vspace, v_pose)
    ml = abs(d_p[0] - d_v[0]) + abs(d_p[1] - d_v[1]) + abs(d_p[2] - d_v[2])
    return ml, (d_p[0], d_p[1], d_p[2], d_v[0], d_v[1], d_v[2])


def _arc_gains(ml: float, dists: tuple[float, ...]) -> tuple[float, float]:
    """Translation gain and signed curvature from one misalignment sample.

    g_t is the clamped physical/virtual front-distance ratio; curvature bends
    toward the side with the smaller |physical - virtual| difference,
    saturating at misalignment ARC_SATURATION_ML.
    """
    d_p_f, d_p_l, d_p_r, d_v_f, d_v_l, d_v_r = dists
    denom = d_v_f if d_v_f > 0.0 else ARC_MIN_FRONT_DIST
    g_t = min(max(d_p_f / denom, GT_MIN), GT_MAX)
    dl = abs(d_p_l - d_v_l)
    dr = abs(d_p_r - d_v_r)
    if dl < dr:
        side = 1.0
    elif dr < dl:
        side = -1.0
    else:
        side = 0.0
    mag = (1.0 / MIN_CURVATURE_RADIUS) * min(1.0, ml / ARC_SATURATION_ML) if ml > 0.0 else 0.0
    return g_t, side * mag


def _kappa_to_gains(g_t: float, g_r: float, kappa: float) -> Gains:
    if abs(kappa) < 1e-12:
        return Gains(g_t, g_r, math.inf, 0)
    return Gains(g_t, g_r, 1.0 / abs(kappa), 1 if kappa > 0.0 else -1)


def arc(u: UserState, vspace: SpaceMap, pspace: SpaceMap,
        prev_ml: Optional[float] = None) -> SteeringDecision:
    """Vanilla alignment steering; rotation gain compares the current
    misalignment against the previous frame's (1.0 on the first frame)."""
    ml_c, dists_c = compute_misalign(u.virtual, u.physical, vspace, pspace)
    g_t, kappa = _arc_gains(ml_c, dists_c)
    if u.frame_dtheta == 0.0 or prev_ml is None:
        g_r = 1.0
    elif ml_c < prev_ml:
        g_r = GR_MIN
    elif ml_c > prev_ml:
        g_r = GR_MAX
    else:
        g_r = 1.0
    return SteeringDecision(_kappa_to_gains(g_t, g_r, kappa), misalign_current=ml_c)


def f_arc(u: UserState, pred: Prediction, mu, vspace: SpaceMap, pspace: SpaceMap,
          future_heading: str = "forward") -> SteeringDecision:
    """Alignment steering blending gains measured at the current pose and at
    the overlaid future pose; rotation gain branches on whether the user
    rotates toward the overlay and which misalignment is smaller.

    future_heading selects the assumed body direction at the future point:
    "forward" uses current->future (per the source method's prose), "reverse"
    flips it.
    """
    m = _mu_value(mu)
    ml_c, dists_c = compute_misalign(u.virtual, u.physical, vspace, pspace)
    g_t_c, kappa_c = _arc_gains(ml_c, dists_c)

    overlay = overlay_future_position(u, pred, pspace)
    dv = pred.future_virtual_position - u.virtual.position
    dp = overlay - u.physical.position
    if dv.norm() <= ARC_MIN_DISPLACEMENT:
        o_v_f = u.virtual.heading
    else:
        o_v_f = dv.angle()
        if future_heading == "reverse":
            o_v_f = wrap_angle(o_v_f + math.pi)
    if dp.norm() <= ARC_MIN_DISPLACEMENT:
        o_p_f = u.physical.heading
    else:
        o_p_f = dp.angle()
        if future_heading == "reverse":
            o_p_f = wrap_angle(o_p_f + math.pi)
    ml_f, dists_f = compute_misalign(
        Pose(pred.future_virtual_position, o_v_f), Pose(overlay, o_p_f), vspace, pspace
    )
    g_t_f, kappa_f = _arc_gains(ml_f, dists_f)

    # the blend of two in-range values can escape the bounds by one ulp
    g_t = min(max(g_t_f * m + g_t_c * (1.0 - m), GT_MIN), GT_MAX)
    kappa_cap = 1.0 / MIN_CURVATURE_RADIUS
    kappa = min(max(kappa_f * m + kappa_c * (1.0 - m), -kappa_cap), kappa_cap)

    if u.frame_dtheta == 0.0 or dp.norm() <= FORCE_EPS:
        g_r = 1.0
    else:
        ang_to_f = wrap_angle(dp.angle() - u.physical.heading)
        rotating_toward = u.frame_dtheta * ang_to_f > 0.0
        if rotating_toward:
            g_r = GR_MIN if ml_c > ml_f else GR_MAX
        else:
            g_r = GR_MAX if ml_c > ml_f else GR_MIN
    return SteeringDecision(
        _kappa_to_gains(g_t, g_r, kappa),
        misalign_current=ml_c,
        misalign_future=ml_f,
        future_overlay=overlay,
    )


# ---------------------------------------------------------------------------
# curvature-action tree search family
# ---------------------------------------------------------------------------


def mpc_stage_cost(u: UserState, physical: SpaceMap, action: MpcAction = MpcAction.NONE,
                   turn: float = 0.0) -> float:
    """Cost of one simulated 1 m segment from the current pose: the reset
    penalty if any 0.25 m substep touches a wall, plus the integrated
    proximity penalty max(0, 1 - clearance), plus a flat curvature charge."""
    edges, bvx, bvy, ovx, ovy, ooff = physical.kernel_args
    _, _, _, _, cost = kernels.mpc_segment(
        u.physical.position.x, u.physical.position.y, u.physical.heading,
        u.virtual.heading, _CODE_BY_ACTION[action], turn,
        edges, bvx, bvy, ovx, ovy, ooff,
        u.body_radius, MPC_SEGMENT_LENGTH, MPC_SUB_STEP, MIN_CURVATURE_RADIUS,
        MPC_CURVATURE_PENALTY, MPC_RESET_COST,
    )
    return float(cost)


def f_mpcred(u: UserState, gamma: DirectionProbs, physical: SpaceMap,
             depth: int = MPC_DEPTH, alpha: float = MPC_ALPHA,
             prune: bool = True) -> MpcAction:
    """Minimum expected-cost curvature action over 3 actions x 3 direction
    hypotheses per stage, weighted by gamma, child costs decayed by alpha,
    with branch-and-bound pruning.  Ties prefer none, then left."""
    action, _ = mpc_search_cost(u, gamma, physical, depth, alpha, prune)
    return action


def mpc_search_cost(u: UserState, gamma: DirectionProbs, physical: SpaceMap,
                    depth: int = MPC_DEPTH, alpha: float = MPC_ALPHA,
                    prune: bool = True) -> tuple[MpcAction, float]:
    edges, bvx, bvy, ovx, ovy, ooff = physical.kernel_args
    code, cost = kernels.mpc_search(
        u.physical.position.x, u.physical.position.y, u.physical.heading,
        u.virtual.heading, depth, gamma.forward, gamma.left, gamma.right,
        edges, bvx, bvy, ovx, ovy, ooff,
        u.body_radius, MPC_SEGMENT_LENGTH, MPC_SUB_STEP, MIN_CURVATURE_RADIUS,
        MPC_CURVATURE_PENALTY, MPC_RESET_COST, alpha, prune,
    )
    return _ACTION_BY_CODE[int(code)], float(cost)


def mpcred(u: UserState, physical: SpaceMap, depth: int = MPC_DEPTH,
           alpha: float = MPC_ALPHA, prune: bool = True) -> MpcAction:
    return f_mpcred(u, DirectionProbs.uniform(), physical, depth, alpha, prune)


def mpc_root_costs(u: UserState, gamma: DirectionProbs, physical: SpaceMap,
                   depth: int = MPC_DEPTH, alpha: float = MPC_ALPHA) -> dict[MpcAction, float]:
    """Exact (unpruned) expected cost of each root action; test/debug hook."""
    edges, bvx, bvy, ovx, ovy, ooff = physical.kernel_args
    gammas = (gamma.forward, gamma.left, gamma.right)
    turns = (0.0, 0.5 * math.pi, -0.5 * math.pi)
    out = {}
    for code, action in enumerate(_ACTION_BY_CODE):
        cost = 0.0
        for s in range(3):
            nx, ny, nph, nvh, stage = kernels.mpc_segment(
                u.physical.position.x, u.physical.position.y, u.physical.heading,
                u.virtual.heading, code, turns[s],
                edges, bvx, bvy, ovx, ovy, ooff,
                u.body_radius, MPC_SEGMENT_LENGTH, MPC_SUB_STEP, MIN_CURVATURE_RADIUS,
                MPC_CURVATURE_PENALTY, MPC_RESET_COST,
            )
            cost += gammas[s] * stage
            if depth > 1:
                _, child = kernels.mpc_search(
                    nx, ny, nph, nvh, depth - 1,
                    gamma.forward, gamma.left, gamma.right,
                    edges, bvx, bvy, ovx, ovy, ooff,
                    u.body_radius, MPC_SEGMENT_LENGTH, MPC_SUB_STEP, MIN_CURVATURE_RADIUS,
                    MPC_CURVATURE_PENALTY, MPC_RESET_COST, alpha, False,
                )
                cost += alpha * gammas[s] * child
        out[action] = cost
    return out


def mpc_action_gains(action: MpcAction) -> Gains:
    if action is MpcAction.CURVATURE_LEFT:
        return Gains(1.0, 1.0, MIN_CURVATURE_RADIUS, 1)
    if action is MpcAction.CURVATURE_RIGHT:
        return Gains(1.0, 1.0, MIN_CURVATURE_RADIUS, -1)
    return Gains()


# ---------------------------------------------------------------------------
# per-trial controller objects for the engine loop
# ---------------------------------------------------------------------------


class Controller:
    """Per-trial stateful wrapper; decide() is called once per frame."""

    name = "base"
    needs_prediction = False
    needs_direction_probs = False

    def begin_trial(self) -> None:
        pass

    def notify_reset(self) -> None:
        pass

    def decide(self, u: UserState, pred: Optional[Prediction],
               probs: Optional[DirectionProbs], mu: float) -> SteeringDecision:
        raise NotImplementedError


class S2CController(Controller):
    name = "s2c"

    def __init__(self, physical: SpaceMap):
        self.physical = physical

    def decide(self, u, pred, probs, mu):
        return s2c(u, self.physical)


class FS2CController(Controller):
    name = "f-s2c"
    needs_prediction = True

    def __init__(self, physical: SpaceMap):
        self.physical = physical

    def decide(self, u, pred, probs, mu):
        return f_s2c(u, pred, mu, self.physical)


class TapfController(Controller):
    name = "tapf"

    def __init__(self, physical: SpaceMap):
        self.physical = physical

    def decide(self, u, pred, probs, mu):
        return tapf(u, self.physical)


class FTapfController(Controller):
    name = "f-tapf"
    needs_prediction = True

    def __init__(self, physical: SpaceMap):
        self.physical = physical

    def decide(self, u, pred, probs, mu):
        return f_tapf(u, pred, mu, self.physical)


class ArcController(Controller):
    name = "arc"

    def __init__(self, vspace: SpaceMap, physical: SpaceMap):
        self.vspace = vspace
        self.physical = physical
        self._prev_ml: Optional[float] = None

    def begin_trial(self):
        self._prev_ml = None

    def decide(self, u, pred, probs, mu):
        decision = arc(u, self.vspace, self.physical, self._prev_ml)
        self._prev_ml = decision.misalign_current
        return decision


class FArcController(Controller):
    name = "f-arc"
    needs_prediction = True

    def __init__(self, vspace: SpaceMap, physical: SpaceMap, future_heading: str = "forward"):
        self.vspace = vspace
        self.physical = physical
        self.future_heading = future_heading

    def decide(self, u, pred, probs, mu):
        return f_arc(u, pred, mu, self.vspace, self.physical, self.future_heading)


class MpcController(Controller):
    """Replans at a fixed cadence (and right after a reset), holding the
    chosen action's gains between plans."""

    def __init__(self, physical: SpaceMap, replan_frames: int,
                 depth: int = MPC_DEPTH, alpha: float = MPC_ALPHA,
                 use_probs: bool = False):
        self.physical = physical
        self.replan_frames = max(1, int(replan_frames))
        self.depth = depth
        self.alpha = alpha
        self.use_probs = use_probs
        self.name = "f-mpcred" if use_probs else "mpcred"
        self.needs_direction_probs = use_probs
        self._countdown = 0
        self._held = MpcAction.NONE

    def begin_trial(self):
        self._countdown = 0
        self._held = MpcAction.NONE

    def notify_reset(self):
        self._countdown = 0

    def decide(self, u, pred, probs, mu):
        if self._countdown <= 0:
            gamma = probs if (self.use_probs and probs is not None) else DirectionProbs.uniform()
            self._held = f_mpcred(u, gamma, self.physical, self.depth, self.alpha)
            self._countdown = self.replan_frames
        self._countdown -= 1
        return SteeringDecision(mpc_action_gains(self._held))
