"""Console entry points: plot_grid <summary.csv> <outdir> and
plot_sweep <sweep.csv> <out.png|svg>."""

from __future__ import annotations

import argparse
import sys

from .figures import plot_experiment_grid, plot_sweep
from .summary import SchemaError, read_summary, read_sweep


def main_grid(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render grouped bar figures from an experiment summary CSV"
    )
    parser.add_argument("summary_csv")
    parser.add_argument("outdir")
    parser.add_argument("--format", choices=("svg", "png"), default="svg")
    args = parser.parse_args(argv)
    try:
        rows = read_summary(args.summary_csv)
    except (SchemaError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    result = plot_experiment_grid(rows, args.outdir, args.format)
    for exp, info in sorted(result.items()):
        print(f"wrote {info['path']}")
    return 0


def main_sweep(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Render an ablation bar chart from a sweep CSV"
    )
    parser.add_argument("sweep_csv")
    parser.add_argument("outfile")
    parser.add_argument("--metric", default="resets")
    args = parser.parse_args(argv)
    try:
        rows = read_sweep(args.sweep_csv)
        result = plot_sweep(rows, args.outfile, args.metric)
    except (SchemaError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {result['path']}")
    return 0


if __name__ == "__main__":
    sys.exit(main_grid())
