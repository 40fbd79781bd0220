import csv
import re
from pathlib import Path

import pytest

from rdwplots.cli import main_grid, main_sweep
from rdwplots.figures import plot_experiment_grid, plot_sweep
from rdwplots.summary import (
    SUMMARY_COLUMNS,
    SWEEP_COLUMNS,
    SchemaError,
    read_summary,
    read_sweep,
)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def summary_fixture_rows():
    rows = []
    for i, exp in enumerate(("e1", "e2", "e3", "e4")):
        for j, ctrl in enumerate(("s2c", "tapf", "arc", "mpcred")):
            for metric, ma, mb in (
                ("resets", 30.25 + i + j, 28.5 + i + j),
                ("mdbr", 3.125 + 0.1 * j + i, 3.5 + 0.1 * j + i),
            ):
                rows.append([
                    exp, ctrl, metric,
                    repr(ma), "2.5", repr(mb), "2.25",
                    "2.4", "0.018", "2.2", "0.028", "100",
                ])
    return rows


@pytest.fixture
def summary_csv(tmp_path):
    path = tmp_path / "summary.csv"
    write_csv(path, SUMMARY_COLUMNS, summary_fixture_rows())
    return path


@pytest.fixture
def sweep_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    rows = []
    for k in range(11):
        mu = round(0.1 * k, 1)
        rows.append(["mu", repr(float(mu)), "e4", "tapf", "resets",
                     "22.0", "3.0", repr(20.0 + 0.5 * k), "2.75", "1.0", "0.3", "1.2", "0.25", "100"])
        rows.append(["mu", repr(float(mu)), "e4", "tapf", "mdbr",
                     "4.5", "0.8", repr(4.0 + 0.1 * k), "0.75", "1.0", "0.3", "1.2", "0.25", "100"])
    write_csv(path, SWEEP_COLUMNS, rows)
    return path


def test_summary_missing_column_named(tmp_path):
    path = tmp_path / "broken.csv"
    cols = [c for c in SUMMARY_COLUMNS if c != "p_w"]
    write_csv(path, cols, [])
    with pytest.raises(SchemaError, match="p_w"):
        read_summary(path)


def test_summary_empty_is_error(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv(path, SUMMARY_COLUMNS, [])
    with pytest.raises(SchemaError, match="no data rows"):
        read_summary(path)


def test_grid_four_figures_with_exact_bar_heights(summary_csv, tmp_path):
    rows = read_summary(summary_csv)
    out = plot_experiment_grid(rows, tmp_path / "figs")
    assert sorted(out) == ["e1", "e2", "e3", "e4"]
    by_key = {(r.experiment, r.controller, r.metric): r for r in rows}
    for exp, info in out.items():
        path = Path(info["path"])
        assert path.exists()
        # 4 controller pairs x 2 bars per metric panel
        assert len(info["bars"]) == 16
        for (ctrl, metric, arm), mean in info["bars"].items():
            want = by_key[(exp, ctrl, metric)]
            assert mean == (want.mean_a if arm == "a" else want.mean_b)
        # pixel-independent: every bar's exact value is embedded in the SVG
        doc = path.read_text()
        for (ctrl, metric, arm), mean in info["bars"].items():
            assert f"bar|{exp}|{ctrl}|{metric}|{arm}|{mean!r}" in doc


def test_grid_deterministic_bytes(summary_csv, tmp_path):
    rows = read_summary(summary_csv)
    plot_experiment_grid(rows, tmp_path / "a")
    plot_experiment_grid(rows, tmp_path / "b")
    for exp in ("e1", "e2", "e3", "e4"):
        assert (tmp_path / "a" / f"grid_{exp}.svg").read_bytes() == (
            tmp_path / "b" / f"grid_{exp}.svg"
        ).read_bytes()


ASTERISK_GLYPH = "DejaVuSans-2a"  # matplotlib's glyph path id for '*'


def test_grid_asterisks_follow_significance(summary_csv, tmp_path):
    # fixture rows carry p_w = 0.028 -> one-star markers everywhere
    out = plot_experiment_grid(read_summary(summary_csv), tmp_path / "figs")
    doc = Path(out["e1"]["path"]).read_text()
    assert ASTERISK_GLYPH in doc


def test_grid_no_asterisks_when_not_significant(tmp_path):
    path = tmp_path / "summary.csv"
    rows = [["e1", "tapf", "resets", "30.0", "2.0", "29.0", "2.0",
             "1.0", "0.32", "0.9", "0.37", "100"]]
    write_csv(path, SUMMARY_COLUMNS, rows)
    out = plot_experiment_grid(read_summary(path), tmp_path / "figs")
    doc = Path(out["e1"]["path"]).read_text()
    assert ASTERISK_GLYPH not in doc


def test_sweep_eleven_bars(sweep_csv, tmp_path):
    rows = read_sweep(sweep_csv)
    out = plot_sweep(rows, tmp_path / "sweep.svg")
    assert len(out["bars"]) == 11
    doc = Path(out["path"]).read_text()
    for value, mean in out["bars"].items():
        assert f"sweepbar|mu|{value!r}|resets|{mean!r}" in doc


def test_sweep_single_point(tmp_path):
    path = tmp_path / "sweep.csv"
    write_csv(path, SWEEP_COLUMNS, [
        ["f_t", "1.0", "e4", "tapf", "resets",
         "22.0", "3.0", "20.0", "2.5", "1.0", "0.3", "1.2", "0.25", "100"],
    ])
    out = plot_sweep(read_sweep(path), tmp_path / "one.svg")
    assert len(out["bars"]) == 1
    assert Path(out["path"]).exists()


def test_sweep_missing_column(tmp_path):
    path = tmp_path / "sweep.csv"
    write_csv(path, SWEEP_COLUMNS[:-1], [])
    with pytest.raises(SchemaError, match="n"):
        read_sweep(path)


def test_cli_grid(summary_csv, tmp_path, capsys):
    rc = main_grid([str(summary_csv), str(tmp_path / "figs")])
    assert rc == 0
    assert (tmp_path / "figs" / "grid_e3.svg").exists()


def test_cli_grid_schema_error(tmp_path):
    path = tmp_path / "bad.csv"
    write_csv(path, ["nope"], [])
    assert main_grid([str(path), str(tmp_path / "figs")]) == 1
    assert not (tmp_path / "figs").exists()


def test_cli_sweep(sweep_csv, tmp_path):
    rc = main_sweep([str(sweep_csv), str(tmp_path / "sweep.svg")])
    assert rc == 0
    assert (tmp_path / "sweep.svg").exists()
