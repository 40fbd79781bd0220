"""Future-information sources standing in for a trained forecaster: a
noise-calibrated oracle, a constant-velocity baseline, and a polarized
3-way walking-direction emulator.

The oracle displaces the agent's true future plan point by an error vector
with uniform direction and truncated-normal magnitude.  The pre-truncation
parameters are solved so the post-truncation moments equal the requested
(mean, sd) exactly; naive truncation of normal(mean, sd) at zero would
inflate the empirical mean error well past the requested value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .agent import PlannedPath, future_point_on_plan
from .environment import SpaceMap, project_into_boundary
from .geometry import Vec2, wrap_angle
from .redirection import UserState

BOUNDARY_INSET = 1e-6

# polarized probability triple emulating the reported direction classifier
POLARIZED_TOP = 0.77
POLARIZED_REST = 0.115

DIRECTION_BIN_HALF_WIDTH = math.radians(45.0)

DEFAULT_MDE_MEAN = 0.45
DEFAULT_MDE_SD = 0.35
DEFAULT_DIR_ACCURACY = 0.77


@dataclass(frozen=True)
class Prediction:
    future_virtual_position: Vec2
    horizon: float

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ValueError("prediction horizon must be positive")


@dataclass(frozen=True)
class DirectionProbs:
    forward: float
    left: float
    right: float

    def __post_init__(self):
        for p in (self.forward, self.left, self.right):
            if not 0.0 <= p <= 1.0:
                raise ValueError("direction probabilities must be in [0, 1]")
        if abs(self.forward + self.left + self.right - 1.0) > 1e-9:
            raise ValueError("direction probabilities must sum to 1")

    @staticmethod
    def uniform() -> "DirectionProbs":
        return DirectionProbs(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)


def _phi(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _trunc_moments(a: float) -> tuple[float, float]:
    """Mean and variance of a standard normal shifted by a, truncated at 0.

    a is mu0/sigma0; returns (mean/sigma0, var/sigma0^2).
    """
    lam = _phi(a) / ndtr(a)  # phi(-a) == phi(a); 1 - Phi(-a) == Phi(a)
    mean = a + lam
    var = 1.0 - a * lam - lam * lam
    return mean, var


class NoiseModel:
    """Displacement-error magnitudes with exact (mde_mean, mde_sd) moments."""

    def __init__(self, mde_mean: float = DEFAULT_MDE_MEAN, mde_sd: float = DEFAULT_MDE_SD):
        if mde_mean < 0.0 or mde_sd < 0.0:
            raise ValueError("noise moments must be non-negative")
        self.mde_mean = float(mde_mean)
        self.mde_sd = float(mde_sd)
        self._mu0 = 0.0
        self._sigma0 = 0.0
        self._p_lo = 0.0
        if self.mde_mean > 0.0 and self.mde_sd > 0.0:
            cv = self.mde_sd / self.mde_mean
            if cv >= 0.999:
                raise ValueError(
                    "mde_sd/mde_mean >= 1 is unreachable for a truncated normal"
                )
            lo, hi = -12.0, 60.0
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                m, v = _trunc_moments(mid)
                if math.sqrt(max(v, 0.0)) / m < cv:
                    hi = mid
                else:
                    lo = mid
            a = 0.5 * (lo + hi)
            m, v = _trunc_moments(a)
            self._sigma0 = self.mde_sd / math.sqrt(v)
            self._mu0 = a * self._sigma0
            self._p_lo = float(ndtr(-self._mu0 / self._sigma0))

    def sample_magnitude(self, rng: np.random.Generator) -> float:
        if self.mde_mean <= 0.0:
            return 0.0
        if self.mde_sd <= 0.0:
            return self.mde_mean
        u = float(rng.uniform(self._p_lo, 1.0))
        return self._mu0 + self._sigma0 * float(ndtri(u))

    def cdf(self, x: float) -> float:
        """CDF of the magnitude distribution (for calibration tests)."""
        if x <= 0.0:
            return 0.0
        if self.mde_sd <= 0.0:
            return 1.0 if x >= self.mde_mean else 0.0
        z = ndtr((x - self._mu0) / self._sigma0)
        return (z - self._p_lo) / (1.0 - self._p_lo)


def predict_position_oracle(path: PlannedPath, u: UserState, f_t: float,
                            noise: NoiseModel, rng: np.random.Generator,
                            vspace: SpaceMap, dt: float = 1.0 / 60.0) -> Prediction:
    """True plan point at horizon f_t plus a calibrated random displacement,
    clamped inside the virtual boundary."""
    base = future_point_on_plan(path, u, f_t, dt)
    mag = noise.sample_magnitude(rng)
    ang = float(rng.uniform(0.0, 2.0 * math.pi))
    p = Vec2(base.x + mag * math.cos(ang), base.y + mag * math.sin(ang))
    if mag > 0.0:
        p = project_into_boundary(vspace, p, BOUNDARY_INSET)
    return Prediction(p, f_t)


class OracleErrorProcess:
    """Displacement-error stream with horizon-scale autocorrelation.

    A sequence model's prediction error varies smoothly, not per frame: the
    drawn error vector is held for one forecast horizon before the next draw.
    The per-draw law is the calibrated truncated normal, so the marginal
    error distribution (and the reported MDE/SD) is unchanged.
    """

    def __init__(self, noise: NoiseModel, refresh_frames: int):
        self.noise = noise
        self.refresh_frames = max(1, int(refresh_frames))
        self._countdown = 0
        self._ex = 0.0
        self._ey = 0.0

    def step(self, rng: np.random.Generator) -> tuple[float, float]:
        if self._countdown <= 0:
            mag = self.noise.sample_magnitude(rng)
            ang = float(rng.uniform(0.0, 2.0 * math.pi))
            self._ex = mag * math.cos(ang)
            self._ey = mag * math.sin(ang)
            self._countdown = self.refresh_frames
        self._countdown -= 1
        return self._ex, self._ey


def predict_position_oracle_held(path: PlannedPath, u: UserState, f_t: float,
                                 error: tuple[float, float], vspace: SpaceMap,
                                 dt: float = 1.0 / 60.0) -> Prediction:
    """Oracle prediction using an externally held error vector."""
    base = future_point_on_plan(path, u, f_t, dt)
    p = Vec2(base.x + error[0], base.y + error[1])
    if error != (0.0, 0.0):
        p = project_into_boundary(vspace, p, BOUNDARY_INSET)
    return Prediction(p, f_t)


def predict_position_cv(u: UserState, recent_velocity: Vec2, f_t: float,
                        vspace: SpaceMap) -> Prediction:
    """Constant-velocity extrapolation baseline, clamped inside the boundary."""
    if f_t <= 0.0:
        raise ValueError("f_t must be positive")
    p = Vec2(u.virtual.position.x + recent_velocity.x * f_t,
             u.virtual.position.y + recent_velocity.y * f_t)
    p = project_into_boundary(vspace, p, BOUNDARY_INSET)
    return Prediction(p, f_t)


def true_direction_class(path: PlannedPath, u: UserState, f_t: float,
                         dt: float = 1.0 / 60.0) -> str:
    """Relative bearing bin of the true future plan point: 90 degree bins
    centered on forward / left / right (backward folds into the side bins)."""
    future = future_point_on_plan(path, u, f_t, dt)
    d = future - u.virtual.position
    if d.norm() <= 1e-12:
        return "forward"
    bearing = wrap_angle(d.angle() - u.virtual.heading)
    if abs(bearing) <= DIRECTION_BIN_HALF_WIDTH:
        return "forward"
    return "left" if bearing > 0.0 else "right"


def predict_direction_probs(path: PlannedPath, u: UserState, f_t: float,
                            accuracy: float, rng: np.random.Generator,
                            dt: float = 1.0 / 60.0) -> DirectionProbs:
    """Polarized (0.77 / 0.115 / 0.115) triple whose top class is the true
    future direction with probability `accuracy`, else one of the other two."""
    if not (1.0 / 3.0 < accuracy <= 1.0):
        raise ValueError("accuracy must be in (1/3, 1]")
    truth = true_direction_class(path, u, f_t, dt)
    u1 = float(rng.uniform(0.0, 1.0))
    u2 = float(rng.uniform(0.0, 1.0))
    if u1 < accuracy:
        reported = truth
    else:
        others = [c for c in ("forward", "left", "right") if c != truth]
        reported = others[0] if u2 < 0.5 else others[1]
    probs = {"forward": POLARIZED_REST, "left": POLARIZED_REST, "right": POLARIZED_REST}
    probs[reported] = POLARIZED_TOP
    return DirectionProbs(probs["forward"], probs["left"], probs["right"])
