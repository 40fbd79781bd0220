"""The 60 Hz engine loop and the Monte Carlo experiment harness: paired-seed
trials of vanilla vs future-fused controllers, summary statistics and CSV
row construction.

Determinism: every trial is a pure function of its TrialConfig.  Each concern
(scene generation, initial poses, targets, prediction noise, direction draws)
owns an independent generator derived from the trial seed, so changing the
controller or predictor can never perturb scene or target sampling.
"""

from __future__ import annotations

import math
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .agent import ALIGN_TOL, PlannedPath, plan_virtual_path
from .controllers import (
    CONTROLLER_NAMES,
    DEFAULT_MU,
    VANILLA_OF,
    ArcController,
    Controller,
    FArcController,
    FS2CController,
    FTapfController,
    MpcController,
    S2CController,
    TapfController,
)
from .environment import (
    SpaceGenerationError,
    SpaceMap,
    TargetSpawnError,
    build_physical_space,
    generate_virtual_space,
    load_scene,
    sample_free_position,
    spawn_target,
)
from .geometry import Vec2
from .predictor import (
    DirectionProbs,
    NoiseModel,
    OracleErrorProcess,
    predict_direction_probs,
    predict_position_cv,
    predict_position_oracle_held,
)
from .redirection import (
    Gains,
    Pose,
    ResetEvent,
    UnrecoverablePoseError,
    UserState,
    advance_headings,
    clamp_gains,
    reset_heading,
)
from .stats import PairedSample, TTestResult, WilcoxonResult, mean_sd, paired_t_test, wilcoxon_signed_rank

INITIAL_POSE_MARGIN = 0.1
MAX_SCENE_ATTEMPTS = 32
FRAME_CAP_FACTOR = 8.0

# rng stream ids per concern
_STREAM_SCENE = 0
_STREAM_POSES = 1
_STREAM_TARGETS = 2
_STREAM_NOISE = 3
_STREAM_DIRECTION = 4


@dataclass(frozen=True)
class TrialConfig:
    experiment: str = "e1"
    controller: str = "s2c"
    predictor: str = "oracle"  # oracle | cv
    dir_probs: str = "predicted"  # predicted | uniform
    mu: Optional[float] = None  # None resolves to the controller default
    f_t: float = 1.0
    seed: int = 0
    distance_budget: float = 100.0
    frame_rate: float = 60.0
    body_radius: float = 0.5
    linear_speed: float = 1.0
    angular_speed: float = math.pi / 2.0
    mde_mean: float = 0.45
    mde_sd: float = 0.35
    dir_accuracy: float = 0.77
    mpc_depth: int = 4
    mpc_alpha: float = 0.8
    mpc_replan_interval: float = 0.5
    arc_future_heading: str = "forward"
    suspend_after_reset: float = 0.5
    physical_scene: Optional[str] = None
    virtual_scene: Optional[str] = None

    def resolved_mu(self) -> float:
        if self.mu is not None:
            return self.mu
        return DEFAULT_MU.get(self.controller, 0.0)

    def validate(self) -> None:
        if self.controller not in CONTROLLER_NAMES:
            raise ValueError(f"unknown controller {self.controller!r}")
        if self.predictor not in ("oracle", "cv"):
            raise ValueError(f"unknown predictor {self.predictor!r}")
        if self.dir_probs not in ("predicted", "uniform"):
            raise ValueError(f"unknown dir_probs {self.dir_probs!r}")
        if self.mu is not None and not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must be in [0, 1]")
        if self.f_t <= 0.0:
            raise ValueError("f_t must be positive")
        if self.distance_budget <= 0.0:
            raise ValueError("distance_budget must be positive")
        if self.frame_rate <= 0.0:
            raise ValueError("frame_rate must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class TrialTrace:
    physical_x: np.ndarray
    physical_y: np.ndarray
    curvature_sign: np.ndarray
    g_t: np.ndarray
    g_r: np.ndarray
    reset_positions: list[Vec2]
    overlay_points: list[Vec2]


@dataclass
class EpisodeMetrics:
    resets: int
    virtual_distance: float
    mdbr: float
    targets_collected: int
    wall_time: float
    flags: tuple[str, ...] = ()
    reset_events: tuple[ResetEvent, ...] = ()
    trace: Optional[TrialTrace] = None


def _stream(seed: int, key: int, sub: Optional[int] = None) -> np.random.Generator:
    entropy = (seed, key) if sub is None else (seed, key, sub)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def _make_controller(cfg: TrialConfig, vspace: SpaceMap, pspace: SpaceMap) -> Controller:
    name = cfg.controller
    if name == "s2c":
        return S2CController(pspace)
    if name == "f-s2c":
        return FS2CController(pspace)
    if name == "tapf":
        return TapfController(pspace)
    if name == "f-tapf":
        return FTapfController(pspace)
    if name == "arc":
        return ArcController(vspace, pspace)
    if name == "f-arc":
        return FArcController(vspace, pspace, cfg.arc_future_heading)
    replan_frames = max(1, round(cfg.mpc_replan_interval * cfg.frame_rate))
    if name == "mpcred":
        return MpcController(pspace, replan_frames, cfg.mpc_depth, cfg.mpc_alpha, use_probs=False)
    if name == "f-mpcred":
        use_probs = cfg.dir_probs == "predicted"
        return MpcController(pspace, replan_frames, cfg.mpc_depth, cfg.mpc_alpha, use_probs=use_probs)
    raise ValueError(f"unknown controller {name!r}")


def compute_mdbr(reset_distances: Sequence[float], total_virtual_distance: float) -> float:
    """Mean virtual distance between consecutive resets (first leg counts from
    the episode start); with no resets this is the total distance itself."""
    if total_virtual_distance < 0.0:
        raise ValueError("total distance must be non-negative")
    if not reset_distances:
        return total_virtual_distance
    deltas = []
    prev = 0.0
    for d in reset_distances:
        deltas.append(d - prev)
        prev = d
    return float(np.mean(deltas))


def _setup_scene(cfg: TrialConfig) -> tuple[SpaceMap, SpaceMap, Vec2, float, Vec2, float, "Target"]:
    """Physical/virtual spaces, initial poses and the first target.

    Virtual scenes that exhaust target spawning are regenerated from the next
    scene substream so an over-constrained layout cannot kill the trial.
    """
    if cfg.physical_scene:
        pspace = load_scene(cfg.physical_scene, nav_radius=cfg.body_radius)
    else:
        pspace = build_physical_space(cfg.experiment, nav_radius=cfg.body_radius)
    pose_rng = _stream(cfg.seed, _STREAM_POSES)
    target_rng = _stream(cfg.seed, _STREAM_TARGETS)
    p0 = sample_free_position(pose_rng, pspace, cfg.body_radius + INITIAL_POSE_MARGIN)
    ph0 = float(pose_rng.uniform(-math.pi, math.pi))
    last_error: Exception | None = None
    for attempt in range(MAX_SCENE_ATTEMPTS):
        if cfg.virtual_scene:
            vspace = load_scene(cfg.virtual_scene, nav_radius=cfg.body_radius)
        else:
            try:
                vspace = generate_virtual_space(_stream(cfg.seed, _STREAM_SCENE, attempt),
                                                nav_radius=cfg.body_radius)
            except SpaceGenerationError as err:
                last_error = err
                continue
        try:
            v0 = sample_free_position(pose_rng, vspace, cfg.body_radius + INITIAL_POSE_MARGIN,
                                      navigable=True)
            vh0 = float(pose_rng.uniform(-math.pi, math.pi))
            target = spawn_target(target_rng, v0, vspace)
        except (SpaceGenerationError, TargetSpawnError) as err:
            last_error = err
            if cfg.virtual_scene:
                raise
            continue
        return pspace, vspace, v0, vh0, p0, ph0, target
    raise SpaceGenerationError(f"could not set up a trial scene: {last_error}")


def run_trial(cfg: TrialConfig, trace: bool = False, record_gains: bool = False) -> EpisodeMetrics:
    """Run one episode until the virtual distance budget is spent."""
    cfg.validate()
    t0 = _time.perf_counter()
    dt = 1.0 / cfg.frame_rate
    pspace, vspace, v0, vh0, p0, ph0, target = _setup_scene(cfg)
    noise_rng = _stream(cfg.seed, _STREAM_NOISE)
    dir_rng = _stream(cfg.seed, _STREAM_DIRECTION)
    noise_model = NoiseModel(cfg.mde_mean, cfg.mde_sd)
    error_process = OracleErrorProcess(noise_model, round(cfg.f_t * cfg.frame_rate))
    controller = _make_controller(cfg, vspace, pspace)
    controller.begin_trial()
    mu_nominal = cfg.resolved_mu()

    path = plan_virtual_path(v0, target, vspace)
    vx, vy, vh = v0.x, v0.y, vh0
    px, py, ph = p0.x, p0.y, ph0
    vdist = 0.0
    sim_time = 0.0
    targets_collected = 0
    events: list[ResetEvent] = []
    flags: list[str] = []
    time_since_reset = math.inf
    prev_clearance = pspace.clearance_xy(px, py)
    prev_vx, prev_vy = vx, vy
    recent_vel = Vec2(0.0, 0.0)

    frame_cap = int(cfg.distance_budget / cfg.linear_speed * cfg.frame_rate * FRAME_CAP_FACTOR) + 1000
    frame = 0

    trace_px: list[float] = []
    trace_py: list[float] = []
    trace_sign: list[int] = []
    trace_gt: list[float] = []
    trace_gr: list[float] = []
    trace_resets: list[Vec2] = []
    trace_overlays: list[Vec2] = []
    record = trace or record_gains

    while vdist < cfg.distance_budget:
        if frame >= frame_cap:
            flags.append("frame_cap")
            break
        dv, dtheta, cursor, _reached = kernels.policy_command(
            vx, vy, vh, path.cursor, path.wx, path.wy, dt,
            cfg.linear_speed, cfg.angular_speed, ALIGN_TOL,
        )
        path.cursor = int(cursor)
        u = UserState(
            Pose(Vec2(vx, vy), vh), Pose(Vec2(px, py), ph),
            cfg.linear_speed, cfg.angular_speed, cfg.body_radius,
            float(dv), float(dtheta),
        )
        suspended = time_since_reset < cfg.suspend_after_reset
        pred = None
        probs = None
        if controller.needs_prediction:
            if cfg.predictor == "oracle":
                pred = predict_position_oracle_held(
                    path, u, cfg.f_t, error_process.step(noise_rng), vspace, dt
                )
            else:
                pred = predict_position_cv(u, recent_vel, cfg.f_t, vspace)
        if controller.needs_direction_probs:
            probs = predict_direction_probs(path, u, cfg.f_t, cfg.dir_accuracy, dir_rng, dt)
        mu_eff = 0.0 if suspended else mu_nominal
        decision = controller.decide(u, pred, probs, mu_eff)
        gains = decision.gains
        if clamp_gains(gains) is not gains:
            raise RuntimeError(f"controller {cfg.controller} emitted unclamped gains {gains}")

        vh, ph, dp = advance_headings(vh, ph, dv, dtheta, gains)
        vx += dv * math.cos(vh)
        vy += dv * math.sin(vh)
        px += dp * math.cos(ph)
        py += dp * math.sin(ph)
        vdist += dv
        sim_time += dt

        if record:
            trace_px.append(px)
            trace_py.append(py)
            trace_sign.append(gains.curvature_sign)
            trace_gt.append(gains.g_t)
            trace_gr.append(gains.g_r)
            if decision.future_overlay is not None:
                trace_overlays.append(decision.future_overlay)

        clearance = pspace.clearance_xy(px, py)
        if clearance <= 0.0:
            raise RuntimeError(
                f"containment violated at frame {frame}: position ({px}, {py})"
            )
        if clearance <= cfg.body_radius and clearance < prev_clearance:
            # reset only fires while moving into the wall; an in-place turn at
            # the trigger distance must not retrigger every frame
            try:
                ph = reset_heading(Vec2(px, py), ph, cfg.body_radius, pspace)
            except UnrecoverablePoseError:
                flags.append("unrecoverable")
                break
            events.append(ResetEvent(sim_time, Vec2(px, py), vdist))
            time_since_reset = 0.0
            controller.notify_reset()
            if record:
                trace_resets.append(Vec2(px, py))
        else:
            time_since_reset += dt
        prev_clearance = clearance

        recent_vel = Vec2((vx - prev_vx) / dt, (vy - prev_vy) / dt)
        prev_vx, prev_vy = vx, vy

        if math.hypot(vx - target.position.x, vy - target.position.y) <= target.radius:
            targets_collected += 1
            try:
                target = spawn_target(_stream(cfg.seed, _STREAM_TARGETS, targets_collected),
                                      Vec2(vx, vy), vspace)
            except TargetSpawnError:
                flags.append("target_spawn_failed")
                break
            path = plan_virtual_path(Vec2(vx, vy), target, vspace)
        frame += 1

    if not events:
        flags.append("no_resets")
    mdbr = compute_mdbr([e.virtual_distance_at_event for e in events], vdist)
    trace_obj = None
    if record:
        trace_obj = TrialTrace(
            np.array(trace_px), np.array(trace_py),
            np.array(trace_sign, dtype=np.int64),
            np.array(trace_gt), np.array(trace_gr),
            trace_resets, trace_overlays,
        )
    return EpisodeMetrics(
        resets=len(events),
        virtual_distance=vdist,
        mdbr=mdbr,
        targets_collected=targets_collected,
        wall_time=_time.perf_counter() - t0,
        flags=tuple(flags),
        reset_events=tuple(events),
        trace=trace_obj,
    )


# ---------------------------------------------------------------------------
# experiment harness
# ---------------------------------------------------------------------------


METRIC_FIELDS = {"resets": "resets", "mdbr": "mdbr"}


@dataclass(frozen=True)
class PairedStats:
    metric: str
    mean_a: float
    sd_a: float
    mean_b: float
    sd_b: float
    t: float
    p_t: float
    z: float
    p_w: float
    n: int


@dataclass
class ExperimentResult:
    experiment: str
    vanilla: str
    fused: str
    seeds: tuple[int, ...]
    trials_a: list[EpisodeMetrics]
    trials_b: list[EpisodeMetrics]
    stats: dict[str, PairedStats] = field(default_factory=dict)

    def arm_configs(self) -> tuple[str, str]:
        return self.vanilla, self.fused


def normalize_pair(pair) -> tuple[str, str]:
    """Accept a base name ('tapf') or an explicit (vanilla, fused) tuple."""
    if isinstance(pair, str):
        base = pair.lower()
        if base.startswith("f-"):
            base = base[2:]
        fused = "f-" + base
        if fused not in VANILLA_OF or VANILLA_OF[fused] != base:
            raise ValueError(f"unknown controller pair {pair!r}")
        return base, fused
    vanilla, fused = pair
    if VANILLA_OF.get(fused) != vanilla:
        raise ValueError(f"not a vanilla/fused pair: {pair!r}")
    return vanilla, fused


def _paired_stats(metric: str, a_vals: Sequence[float], b_vals: Sequence[float]) -> PairedStats:
    mean_a, sd_a = mean_sd(a_vals)
    mean_b, sd_b = mean_sd(b_vals)
    sample = PairedSample(a_vals, b_vals)
    t_res: TTestResult = paired_t_test(sample)
    w_res: WilcoxonResult = wilcoxon_signed_rank(sample)
    return PairedStats(
        metric, mean_a, sd_a, mean_b, sd_b,
        t_res.t, t_res.p, w_res.z, w_res.p, len(a_vals),
    )


def run_trials(configs: Sequence[TrialConfig], threads: int = 1) -> list[EpisodeMetrics]:
    """Run independent trials, optionally on a process pool; order preserved."""
    if threads <= 1:
        return [run_trial(cfg) for cfg in configs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_trial, configs))


def run_experiment(experiment: str, pair, trials: int, base_seed: int,
                   base_cfg: Optional[TrialConfig] = None, threads: int = 1) -> ExperimentResult:
    """Paired-seed comparison of a vanilla controller and its fused variant:
    trial i of both arms shares seed base_seed + i."""
    if trials < 2:
        raise ValueError("need at least 2 trials")
    vanilla, fused = normalize_pair(pair)
    cfg = base_cfg if base_cfg is not None else TrialConfig()
    seeds = tuple(base_seed + i for i in range(trials))
    cfgs_a = [replace(cfg, experiment=experiment, controller=vanilla, seed=s) for s in seeds]
    cfgs_b = [replace(cfg, experiment=experiment, controller=fused, seed=s) for s in seeds]
    results = run_trials(cfgs_a + cfgs_b, threads)
    trials_a = results[:trials]
    trials_b = results[trials:]
    result = ExperimentResult(experiment, vanilla, fused, seeds, trials_a, trials_b)
    for metric, attr in METRIC_FIELDS.items():
        a_vals = [float(getattr(m, attr)) for m in trials_a]
        b_vals = [float(getattr(m, attr)) for m in trials_b]
        result.stats[metric] = _paired_stats(metric, a_vals, b_vals)
    return result


def sweep(parameter: str, grid: Sequence[float], experiment: str, pair,
          trials: int, base_seed: int, base_cfg: Optional[TrialConfig] = None,
          threads: int = 1) -> list[tuple[float, ExperimentResult]]:
    """run_experiment at every grid value of mu or f_t (applied to the fused arm)."""
    if parameter not in ("mu", "f_t"):
        raise ValueError("sweep parameter must be 'mu' or 'f_t'")
    if not grid:
        raise ValueError("sweep grid must be non-empty")
    cfg = base_cfg if base_cfg is not None else TrialConfig()
    out = []
    for value in grid:
        if parameter == "mu":
            c = replace(cfg, mu=float(value))
        else:
            c = replace(cfg, f_t=float(value))
        out.append((float(value), run_experiment(experiment, pair, trials, base_seed, c, threads)))
    return out


# ---------------------------------------------------------------------------
# CSV row construction (schemas consumed by the plotting component)
# ---------------------------------------------------------------------------

TRIAL_CSV_COLUMNS = (
    "experiment", "controller", "mu", "f_t", "seed",
    "resets", "virtual_distance", "mdbr", "targets", "flags",
)

SUMMARY_CSV_COLUMNS = (
    "experiment", "controller", "metric",
    "mean_a", "sd_a", "mean_b", "sd_b", "t", "p_t", "z", "p_w", "n",
)

SWEEP_CSV_COLUMNS = ("parameter", "value") + SUMMARY_CSV_COLUMNS


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def trial_csv_row(cfg: TrialConfig, m: EpisodeMetrics) -> list[str]:
    return [
        cfg.experiment, cfg.controller, _fmt(cfg.resolved_mu()), _fmt(cfg.f_t),
        str(cfg.seed), str(m.resets), _fmt(m.virtual_distance), _fmt(m.mdbr),
        str(m.targets_collected), "|".join(m.flags),
    ]


def summary_csv_rows(result: ExperimentResult) -> list[list[str]]:
    rows = []
    for metric in METRIC_FIELDS:
        s = result.stats[metric]
        rows.append([
            result.experiment, result.vanilla, metric,
            _fmt(s.mean_a), _fmt(s.sd_a), _fmt(s.mean_b), _fmt(s.sd_b),
            _fmt(s.t), _fmt(s.p_t), _fmt(s.z), _fmt(s.p_w), str(s.n),
        ])
    return rows
