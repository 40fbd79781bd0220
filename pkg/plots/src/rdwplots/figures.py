"""Grouped bar charts of the experiment summaries and ablation sweeps.

Output is deterministic: fixed figure geometry, a fixed SVG hash salt and no
date metadata.  Every bar artist carries a gid embedding its exact plotted
value, so tests can verify bar heights from the SVG text alone.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .summary import SummaryRow, SweepRow

VANILLA_COLOR = "#9ecae1"
FUSED_COLOR = "#3182bd"
METRIC_LABELS = {"resets": "resets per episode", "mdbr": "mean distance between resets (m)"}

matplotlib.rcParams["svg.hashsalt"] = "rdwsim-plots"


def _significance_marker(p: float) -> str:
    if math.isnan(p):
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata={"Date": None} if path.suffix == ".svg" else None)
    plt.close(fig)


def plot_experiment_grid(rows: list[SummaryRow], outdir, fmt: str = "svg") -> dict:
    """One figure per experiment: paired vanilla/fused bars per controller and
    metric, SD error bars, significance asterisks from the signed-rank p.

    Returns {experiment: {"path": file, "bars": {(controller, metric, arm): mean}}}.
    """
    outdir = Path(outdir)
    experiments = sorted({r.experiment for r in rows})
    out = {}
    for exp in experiments:
        exp_rows = [r for r in rows if r.experiment == exp]
        metrics = sorted({r.metric for r in exp_rows})
        controllers = sorted({r.controller for r in exp_rows})
        fig, axes = plt.subplots(1, len(metrics), figsize=(5.0 * len(metrics), 3.6))
        if len(metrics) == 1:
            axes = [axes]
        bars = {}
        for ax, metric in zip(axes, metrics):
            mrows = {r.controller: r for r in exp_rows if r.metric == metric}
            xs = range(len(controllers))
            width = 0.38
            for i, ctrl in enumerate(controllers):
                r = mrows[ctrl]
                b_a = ax.bar(i - width / 2, r.mean_a, width, yerr=r.sd_a, capsize=3,
                             color=VANILLA_COLOR, edgecolor="black", linewidth=0.5)
                b_b = ax.bar(i + width / 2, r.mean_b, width, yerr=r.sd_b, capsize=3,
                             color=FUSED_COLOR, edgecolor="black", linewidth=0.5)
                b_a[0].set_gid(f"bar|{exp}|{ctrl}|{metric}|a|{r.mean_a!r}")
                b_b[0].set_gid(f"bar|{exp}|{ctrl}|{metric}|b|{r.mean_b!r}")
                bars[(ctrl, metric, "a")] = r.mean_a
                bars[(ctrl, metric, "b")] = r.mean_b
                marker = _significance_marker(r.p_w)
                if marker:
                    top = max(r.mean_a + r.sd_a, r.mean_b + r.sd_b)
                    ax.text(i, top * 1.04, marker, ha="center", va="bottom", fontsize=11)
            ax.set_xticks(list(xs))
            ax.set_xticklabels([f"{c}\nvs f-{c}" for c in controllers], fontsize=8)
            ax.set_ylabel(METRIC_LABELS.get(metric, metric))
            ax.set_title(f"{exp.upper()} - {metric}")
            ax.margins(y=0.15)
        fig.tight_layout()
        path = outdir / f"grid_{exp}.{fmt}"
        _save(fig, path)
        out[exp] = {"path": path, "bars": bars}
    return out


def plot_sweep(rows: list[SweepRow], outpath, metric: str = "resets") -> dict:
    """Bar chart of the fused arm's metric over the swept grid, SD error bars.

    Returns {"path": file, "bars": {value: mean}}.
    """
    outpath = Path(outpath)
    sel = [r for r in rows if r.summary.metric == metric]
    if not sel:
        from .summary import SchemaError

        raise SchemaError(f"no rows for metric {metric!r}")
    sel.sort(key=lambda r: r.value)
    parameter = sel[0].parameter
    fig, ax = plt.subplots(figsize=(max(4.0, 0.6 * len(sel) + 2.0), 3.4))
    bars = {}
    for i, r in enumerate(sel):
        b = ax.bar(i, r.summary.mean_b, 0.7, yerr=r.summary.sd_b, capsize=3,
                   color=FUSED_COLOR, edgecolor="black", linewidth=0.5)
        b[0].set_gid(f"sweepbar|{parameter}|{r.value!r}|{metric}|{r.summary.mean_b!r}")
        bars[r.value] = r.summary.mean_b
    ax.set_xticks(range(len(sel)))
    ax.set_xticklabels([f"{r.value:g}" for r in sel], fontsize=8)
    ax.set_xlabel(parameter)
    ax.set_ylabel(METRIC_LABELS.get(metric, metric))
    ax.set_title(f"{parameter} sweep ({sel[0].summary.experiment.upper()}, "
                 f"{sel[0].summary.controller} pair)")
    ax.margins(y=0.15)
    fig.tight_layout()
    _save(fig, outpath)
    return {"path": outpath, "bars": bars}
