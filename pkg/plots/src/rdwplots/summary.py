"""Parsing and validation of the simulator's stable CSV schemas.

Summary rows are keyed by (experiment, controller, metric); the column sets
must match the documented schemas exactly, and any missing column is reported
by name.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

SUMMARY_COLUMNS = (
    "experiment", "controller", "metric",
    "mean_a", "sd_a", "mean_b", "sd_b", "t", "p_t", "z", "p_w", "n",
)

SWEEP_COLUMNS = ("parameter", "value") + SUMMARY_COLUMNS


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class SummaryRow:
    experiment: str
    controller: str
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


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    summary: SummaryRow


def _check_header(header, required, path):
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    extra = [c for c in header if c not in required]
    if extra:
        raise SchemaError(f"{path}: unexpected column(s) {', '.join(extra)}")


def _parse_summary_fields(rec, path) -> SummaryRow:
    try:
        return SummaryRow(
            experiment=rec["experiment"],
            controller=rec["controller"],
            metric=rec["metric"],
            mean_a=float(rec["mean_a"]),
            sd_a=float(rec["sd_a"]),
            mean_b=float(rec["mean_b"]),
            sd_b=float(rec["sd_b"]),
            t=float(rec["t"]),
            p_t=float(rec["p_t"]),
            z=float(rec["z"]),
            p_w=float(rec["p_w"]),
            n=int(rec["n"]),
        )
    except (KeyError, ValueError) as err:
        raise SchemaError(f"{path}: bad summary row {rec}: {err}") from None


def read_summary(path) -> list[SummaryRow]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        _check_header(reader.fieldnames, SUMMARY_COLUMNS, path)
        rows = [_parse_summary_fields(rec, path) for rec in reader]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def read_sweep(path) -> list[SweepRow]:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        _check_header(reader.fieldnames, SWEEP_COLUMNS, path)
        rows = []
        for rec in reader:
            try:
                value = float(rec["value"])
            except (KeyError, ValueError) as err:
                raise SchemaError(f"{path}: bad sweep row {rec}: {err}") from None
            rows.append(SweepRow(rec["parameter"], value, _parse_summary_fields(rec, path)))
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows
