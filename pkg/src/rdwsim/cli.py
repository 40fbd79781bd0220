"""Command-line front end: config parsing with validation, experiment
orchestration, CSV output and SVG trajectory rendering.

Config files are flat `key = value` lines (# comments); any flag given on the
command line overrides the file value.  Exit codes: 0 success, 1 config
error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .controllers import CONTROLLER_NAMES, VANILLA_OF
from .environment import PHYSICAL_EXPERIMENTS
from .simulation import (
    SUMMARY_CSV_COLUMNS,
    SWEEP_CSV_COLUMNS,
    TRIAL_CSV_COLUMNS,
    TrialConfig,
    normalize_pair,
    run_experiment,
    run_trial,
    run_trials,
    summary_csv_rows,
    sweep,
    trial_csv_row,
)
from .svg import render_trajectory_svg


class ConfigError(ValueError):
    pass


def _positive(key, value):
    if value <= 0:
        raise ConfigError(f"{key}: must be positive, got {value}")
    return value


def _non_negative(key, value):
    if value < 0:
        raise ConfigError(f"{key}: must be non-negative, got {value}")
    return value


def _unit_interval(key, value):
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{key}: must be in [0, 1], got {value}")
    return value


def _choice(options):
    def check(key, value):
        if value not in options:
            raise ConfigError(f"{key}: expected one of {sorted(options)}, got {value!r}")
        return value

    return check


def _any(key, value):
    return value


# key -> (python type, validator); defaults come from TrialConfig/RunSpec
CONFIG_SCHEMA = {
    "experiment": (str, _choice(PHYSICAL_EXPERIMENTS)),
    "controller": (str, _choice(CONTROLLER_NAMES)),
    "pairs": (str, _any),
    "predictor": (str, _choice(("oracle", "cv"))),
    "dir_probs": (str, _choice(("predicted", "uniform"))),
    "mu": (float, _unit_interval),
    "f_t": (float, _positive),
    "trials": (int, _positive),
    "seed": (int, _non_negative),
    "distance_budget": (float, _positive),
    "frame_rate": (float, _positive),
    "body_radius": (float, _positive),
    "linear_speed": (float, _positive),
    "angular_speed": (float, _positive),
    "mde_mean": (float, _non_negative),
    "mde_sd": (float, _non_negative),
    "dir_accuracy": (float, _unit_interval),
    "mpc_depth": (int, _positive),
    "mpc_alpha": (float, _unit_interval),
    "mpc_replan_interval": (float, _positive),
    "arc_future_heading": (str, _choice(("forward", "reverse"))),
    "suspend_after_reset": (float, _non_negative),
    "physical_scene": (str, _any),
    "virtual_scene": (str, _any),
    "out": (str, _any),
    "threads": (int, _positive),
}

_TRIAL_FIELDS = {f.name for f in fields(TrialConfig)}


@dataclass
class RunSpec:
    """Fully-resolved experiment specification."""

    experiments: tuple[str, ...]
    pairs: tuple[str, ...]
    controller: str | None
    trials: int
    seed: int
    out: str
    threads: int
    base_cfg: TrialConfig


def parse_config_file(path) -> dict:
    """Flat key = value config; unknown keys and type errors are diagnosed
    with the offending key name."""
    values = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        typ, check = CONFIG_SCHEMA[key]
        try:
            parsed = typ(val)
        except ValueError:
            raise ConfigError(
                f"{path}:{lineno}: {key}: expected {typ.__name__}, got {val!r}"
            ) from None
        values[key] = check(key, parsed)
    return values


def resolve_spec(args: argparse.Namespace) -> RunSpec:
    """Merge config file values with flag overrides (flags win) and validate."""
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for key in CONFIG_SCHEMA:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            typ, check = CONFIG_SCHEMA[key]
            values[key] = check(key, typ(flag))

    experiments = tuple(
        e.strip().lower() for e in str(values.get("experiment", "e1")).split(",") if e.strip()
    )
    for e in experiments:
        _choice(PHYSICAL_EXPERIMENTS)("experiment", e)

    pairs_raw = values.get("pairs")
    pairs: tuple[str, ...] = ()
    if pairs_raw:
        if pairs_raw.strip().lower() == "all":
            pairs = tuple(sorted(set(VANILLA_OF.values())))
        else:
            names = [p.strip().lower() for p in pairs_raw.split(",") if p.strip()]
            try:
                pairs = tuple(normalize_pair(p)[0] for p in names)
            except ValueError as err:
                raise ConfigError(f"pairs: {err}") from None

    trial_values = {k: v for k, v in values.items() if k in _TRIAL_FIELDS and k != "experiment"}
    base_cfg = TrialConfig(**trial_values)
    try:
        base_cfg.validate()
    except ValueError as err:
        raise ConfigError(str(err)) from None

    return RunSpec(
        experiments=experiments,
        pairs=pairs,
        controller=values.get("controller"),
        trials=int(values.get("trials", 100)),
        seed=int(values.get("seed", 1000)),
        out=str(values.get("out", "results")),
        threads=int(values.get("threads", 1)),
        base_cfg=base_cfg,
    )


def _write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _parse_grid(text: str) -> list[float]:
    """Either comma-separated values or start:stop:step (inclusive)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid: expected start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError("grid: step must be positive")
        out = []
        v = start
        while v <= stop + 1e-9:
            out.append(round(v, 10))
            v += step
        return out
    return [float(p) for p in text.split(",") if p.strip()]


def cmd_run(args) -> int:
    spec = resolve_spec(args)
    out = Path(spec.out)
    trial_rows = []
    summary_by_exp: dict[str, list[list[str]]] = {}
    for exp in spec.experiments:
        if spec.pairs:
            for pair in spec.pairs:
                result = run_experiment(exp, pair, spec.trials, spec.seed,
                                        spec.base_cfg, spec.threads)
                for arm, trials_m in ((result.vanilla, result.trials_a),
                                      (result.fused, result.trials_b)):
                    for seed, m in zip(result.seeds, trials_m):
                        cfg = replace(spec.base_cfg, experiment=exp, controller=arm, seed=seed)
                        trial_rows.append(trial_csv_row(cfg, m))
                summary_by_exp.setdefault(exp, []).extend(summary_csv_rows(result))
        elif spec.controller:
            cfgs = [
                replace(spec.base_cfg, experiment=exp, controller=spec.controller,
                        seed=spec.seed + i)
                for i in range(spec.trials)
            ]
            for cfg, m in zip(cfgs, run_trials(cfgs, spec.threads)):
                trial_rows.append(trial_csv_row(cfg, m))
        else:
            raise ConfigError("run needs --pairs or --controller")
    _write_csv(out / "trials.csv", TRIAL_CSV_COLUMNS, trial_rows)
    all_summary = []
    for exp, rows in summary_by_exp.items():
        _write_csv(out / f"summary_{exp}.csv", SUMMARY_CSV_COLUMNS, rows)
        all_summary.extend(rows)
    if all_summary:
        _write_csv(out / "summary.csv", SUMMARY_CSV_COLUMNS, all_summary)
    print(f"wrote {len(trial_rows)} trial rows to {out/'trials.csv'}")
    if all_summary:
        print(f"wrote summaries for {sorted(summary_by_exp)} to {out}")
    return 0


def cmd_sweep(args) -> int:
    spec = resolve_spec(args)
    if not getattr(args, "param", None):
        raise ConfigError("sweep needs --param mu|f_t")
    grid = _parse_grid(args.grid) if args.grid else None
    if not grid:
        raise ConfigError("sweep needs a non-empty --grid")
    controller = spec.controller or (("f-" + spec.pairs[0]) if spec.pairs else None)
    if controller is None:
        raise ConfigError("sweep needs --controller (the fused variant to sweep)")
    pair = normalize_pair(controller)
    exp = spec.experiments[0]
    results = sweep(args.param, grid, exp, pair, spec.trials, spec.seed,
                    spec.base_cfg, spec.threads)
    rows = []
    for value, result in results:
        for srow in summary_csv_rows(result):
            rows.append([args.param, repr(float(value))] + srow)
    out = Path(spec.out)
    path = out / f"sweep_{args.param}_{pair[1]}_{exp}.csv"
    _write_csv(path, SWEEP_CSV_COLUMNS, rows)
    print(f"wrote {len(rows)} sweep rows to {path}")
    return 0


def cmd_render(args) -> int:
    spec = resolve_spec(args)
    controller = spec.controller or "s2c"
    cfg = replace(spec.base_cfg, experiment=spec.experiments[0],
                  controller=controller, seed=spec.seed)
    metrics = run_trial(cfg, trace=True)
    from .environment import build_physical_space, load_scene

    if cfg.physical_scene:
        space = load_scene(cfg.physical_scene, nav_radius=cfg.body_radius)
    else:
        space = build_physical_space(cfg.experiment, nav_radius=cfg.body_radius)
    doc = render_trajectory_svg(space, metrics.trace, include_overlays=args.overlays)
    out = Path(args.svg_out or (Path(spec.out) / f"trajectory_{cfg.experiment}_{controller}_{cfg.seed}.svg"))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(doc)
    print(f"wrote {out} ({metrics.resets} resets over {metrics.virtual_distance:.1f} m)")
    return 0


def cmd_validate(args) -> int:
    spec = resolve_spec(args)
    mode = "pairs" if spec.pairs else ("controller" if spec.controller else "unset")
    print(
        f"config ok: experiments={','.join(spec.experiments)} mode={mode} "
        f"trials={spec.trials} seed={spec.seed}"
    )
    return 0


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--experiment", help="comma-separated experiment ids (e1..e4)")
    p.add_argument("--controller", help="single controller id")
    p.add_argument("--pairs", "--pair", dest="pairs",
                   help="'all' or comma-separated base names (tapf,arc,...)")
    p.add_argument("--predictor", help="oracle | cv")
    p.add_argument("--mu", help="fusion weight override")
    p.add_argument("--ft", dest="f_t", help="forecast horizon seconds")
    p.add_argument("--trials", help="trials per arm")
    p.add_argument("--seed", help="base seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", help="worker processes")
    for key in (
        "dir_probs", "distance_budget", "frame_rate", "body_radius", "linear_speed",
        "angular_speed", "mde_mean", "mde_sd", "dir_accuracy", "mpc_depth", "mpc_alpha",
        "mpc_replan_interval", "arc_future_heading", "suspend_after_reset",
        "physical_scene", "virtual_scene",
    ):
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdwsim",
        description="Redirected-walking simulator with future-position steering",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run paired experiments and write CSVs")
    _add_common_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="mu / f_t ablation grids")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--param", choices=("mu", "f_t"))
    p_sweep.add_argument("--grid", help="start:stop:step or comma list")
    p_sweep.set_defaults(func=cmd_sweep)

    p_render = sub.add_parser("render", help="replay one seed and write an SVG")
    _add_common_flags(p_render)
    p_render.add_argument("--svg-out", dest="svg_out", help="output SVG path")
    p_render.add_argument("--overlays", action="store_true",
                          help="draw future-overlay points")
    p_render.set_defaults(func=cmd_render)

    p_val = sub.add_parser("validate", help="check a config without running")
    _add_common_flags(p_val)
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - CLI boundary
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
