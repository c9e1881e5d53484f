import csv
import json
import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coverloop.metrics import (
    MetricsEntry,
    coverage_regain,
    emit_report,
    format_curve_svg,
    load_report,
    opt_runtime,
    opt_test_runs,
    round2,
)

ALU_LINEAR = MetricsEntry("alu", "linear", 100, 22, 426.88, 175.15, 98.57, 99.72)


@pytest.mark.parametrize(
    "fn,args,expected",
    [
        (opt_test_runs, (100, 22), 4.55),
        (opt_test_runs, (200, 11), 18.18),
        (opt_test_runs, (50, 8), 6.25),
        (opt_test_runs, (7, 7), 1.00),
        (opt_runtime, (426.88, 175.15), 2.44),
        (opt_runtime, (147.64, 3.40), 43.42),
        (opt_runtime, (3.5, 3.5), 1.00),
        (coverage_regain, (100.0, 100.0), 100.00),
        (coverage_regain, (0.0, 80.0), 0.00),
    ],
)
def test_reference_metric_values(fn, args, expected):
    assert round2(fn(*args)) == expected


def test_alu_linear_regain_within_tolerance():
    assert abs(round2(coverage_regain(99.72, 98.57)) - 101.16) <= 0.02


@pytest.mark.parametrize("fn,args", [(opt_test_runs, (5, 0)), (opt_runtime, (1.0, 0.0)), (coverage_regain, (5.0, 0.0))])
def test_zero_denominators(fn, args):
    with pytest.raises(ZeroDivisionError):
        fn(*args)


@given(st.floats(0.01, 1e4), st.floats(0.01, 1e4), st.floats(0.01, 100))
def test_scale_invariance(t1, t2, a):
    assert opt_runtime(a * t1, a * t2) == pytest.approx(opt_runtime(t1, t2), rel=1e-12)
    assert coverage_regain(a * t1, a * t2) == pytest.approx(coverage_regain(t1, t2), rel=1e-12)


@given(st.floats(0.01, 100))
def test_regain_of_equal_coverage_is_exactly_100(c):
    assert coverage_regain(c, c) == 100.0


def test_report_json_schema_and_round_trip(tmp_path):
    emit_report([ALU_LINEAR], tmp_path)
    doc = json.loads((tmp_path / "report.json").read_text())
    entry = doc["entries"][0]
    for k in ("n_orig", "n_opt", "t_orig", "t_opt", "c_orig", "c_opt", "opt_test_runs", "opt_runtime", "coverage_regain"):
        assert k in entry
    (again,) = load_report(tmp_path / "report.json")
    assert again.to_dict() == entry


def test_report_csv_row(tmp_path):
    emit_report([ALU_LINEAR], tmp_path)
    text = (tmp_path / "report.csv").read_text()
    assert "\r" not in text
    assert "4.55,2.44,101.17" in text.splitlines()[1]


def test_table_layout_has_one_column_per_algorithm(tmp_path):
    entries = [MetricsEntry("ecc", a, 50, 8, 10.0, 1.0, 100.0, 100.0) for a in ("linear", "dt", "knn")]
    emit_report(entries, tmp_path)
    rows = list(csv.reader((tmp_path / "report_table.csv").open()))
    assert rows[0] == ["metric", "duv", "linear", "dt", "knn"]
    assert rows[1] == ["opt_test_runs", "ecc", "6.25", "6.25", "6.25"]
    assert len(rows) == 4


def test_missing_optimized_run_leaves_cells_empty(tmp_path):
    e = MetricsEntry("alu", "linear", 100, 0, 1.0, 0.0, 80.0, 0.0)
    assert e.computed() == {"opt_test_runs": None, "opt_runtime": None, "coverage_regain": 0.0}
    emit_report([e], tmp_path)
    row = (tmp_path / "report.csv").read_text().splitlines()[1]
    assert row.startswith("alu,linear,,,0.00,")


def test_svg_polyline_non_decreasing(tmp_path):
    curve = [(1, 40.0), (2, 40.0), (3, 75.5), (4, 100.0)]
    emit_report([ALU_LINEAR], tmp_path, {("alu", "linear"): curve})
    svg = (tmp_path / "coverage_curve_alu_linear.svg").read_text()
    pts = re.search(r'points="([^"]+)"', svg).group(1).split()
    ys = [float(p.split(",")[1]) for p in pts]
    # svg y grows downward, so coverage going up means y going down
    assert ys == sorted(ys, reverse=True)
    assert (tmp_path / "coverage_curve_alu_linear.csv").read_text().splitlines()[0] == "tests,coverage_pct"


def test_svg_is_deterministic():
    c = [(1, 10.0), (2, 20.0)]
    assert format_curve_svg(c, "x") == format_curve_svg(c, "x")


def test_empty_report_rejected(tmp_path):
    with pytest.raises(ValueError):
        emit_report([], tmp_path)
