import hashlib
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coverloop.errors import ConfigError, ParseError
from coverloop.runner import (
    Dataset,
    RegressionPlan,
    TestSpec,
    concat,
    format_dataset,
    original_plan,
    read_dataset,
    run_regression,
    write_dataset,
)
from coverloop.stimulus import ConstraintSet
from coverloop.testbench import ALU_FIELDS, get_bench


def _plan(tests, txns, cs=None, seed=3):
    cs = cs or ConstraintSet()
    return RegressionPlan("alu", [TestSpec(f"t{i}", (cs,), txns) for i in range(tests)], seed)


def test_point_constraints_single_row():
    cs = ConstraintSet({"op": [(0, 0)], "a": [(5, 5)], "b": [(9, 9)]})
    _, ds = run_regression(_plan(1, 1, cs), get_bench("alu"))
    assert len(ds) == 1
    assert ds.values.tolist() == [[0.0, 5.0, 9.0]]


def test_row_accounting():
    _, ds = run_regression(_plan(2, 5), get_bench("alu"))
    assert len(ds) == 10
    assert ds.test_index.tolist() == [0] * 5 + [1] * 5


def test_dataset_bytes_are_deterministic(tmp_path):
    bench = get_bench("alu")
    digests = []
    for i in range(2):
        _, ds = run_regression(original_plan(bench, tests=10, txns=20, master_seed=42), bench)
        p = tmp_path / f"d{i}.csv"
        write_dataset(ds, p)
        digests.append(hashlib.sha256(p.read_bytes()).hexdigest())
    assert digests[0] == digests[1]


@pytest.mark.parametrize("duv", ["alu", "ecc", "adc"])
def test_summary_invariants_and_self_consistency(duv):
    bench = get_bench(duv)
    summary, ds = run_regression(original_plan(bench, tests=6, txns=30), bench)
    assert len(ds) == 180
    curve = [c for _, c in summary.coverage_curve]
    assert curve == sorted(curve) and curve[-1] == summary.coverage_pct
    assert summary.scoreboard_errors == 0
    names = ds.field_names
    for row, flags in zip(ds.values, ds.hits):
        rec = {n: (v if bench.field(n).kind == "real" else int(v)) for n, v in zip(names, row)}
        assert tuple(int(b.matches(rec)) for b in bench.covergroup.bins) == tuple(flags)


def test_empty_dataset_is_header_only(tmp_path):
    bench = get_bench("alu")
    ds = Dataset.empty(bench.fields, bench.covergroup.names)
    p = tmp_path / "e.csv"
    write_dataset(ds, p)
    assert p.read_text().count("\n") == 1
    assert read_dataset(p, bench.fields) == ds


def test_one_row_format():
    ds = Dataset(ALU_FIELDS, ("bin_0", "bin_1"), [0], [[1, 2, 3]], [[1, 0]])
    assert format_dataset(ds) == "test_index,op,a,b,bin_0,bin_1\n0,1,2,3,1,0\n"


def test_real_format_uses_six_decimals():
    bench = get_bench("adc")
    ds = Dataset(bench.fields, ("x",), [0, 0], [[-0.0], [0.1234567]], [[0], [1]])
    assert format_dataset(ds).splitlines()[1:] == ["0,0.000000,0", "0,0.123457,1"]


datasets = st.integers(0, 100).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 50), min_size=n, max_size=n),
        st.lists(st.tuples(st.integers(0, 7), st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1)), min_size=n, max_size=n),
        st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=n, max_size=n),
    )
)


@given(datasets)
def test_round_trip(parts):
    idx, vals, hits = parts
    n = len(idx)
    ds = Dataset(ALU_FIELDS, ("x", "y"), idx, np.array(vals, dtype=float).reshape(n, 3), np.array(hits).reshape(n, 2))
    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "r.csv"
        write_dataset(ds, p)
        assert read_dataset(p, ALU_FIELDS) == ds


def test_parse_error_carries_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("test_index,op,a,b,x\n0,1,2,3,0\n0,1,2,oops,1\n")
    with pytest.raises(ParseError, match="line 3"):
        read_dataset(p, ALU_FIELDS)
    p.write_text("test_index,op,a,b,x\n0,1,2,3\n")
    with pytest.raises(ParseError, match="line 2"):
        read_dataset(p, ALU_FIELDS)
    p.write_text("index,op\n")
    with pytest.raises(ParseError, match="line 1"):
        read_dataset(p, ALU_FIELDS)


def test_invalid_plan_rejected_before_simulation():
    bench = get_bench("alu")
    with pytest.raises(ConfigError):
        run_regression(_plan(1, 1, ConstraintSet({"a": [(0, 2**40)]})), bench)
    with pytest.raises(ConfigError):
        run_regression(RegressionPlan("alu", [TestSpec("t", (ConstraintSet(),), 0)], 1), bench)
    dup = RegressionPlan("alu", [TestSpec("t", (ConstraintSet(),), 1)] * 2, 1)
    with pytest.raises(ConfigError):
        run_regression(dup, bench)


def test_sequence_plan_round_trip():
    bench = get_bench("alu")
    a = ConstraintSet({"op": [(0, 0)]})
    b = ConstraintSet({"op": [(7, 7)]})
    plan = RegressionPlan("alu", [TestSpec("s", (a, b), 40, ("x", "y"))], 9)
    again = RegressionPlan.from_dict(plan.to_dict(), bench.fields)
    assert again == plan
    _, ds = run_regression(plan, bench)
    ops = set(ds.column("op").tolist())
    assert ops == {0.0, 7.0}


def test_concat_renumbers():
    bench = get_bench("alu")
    _, d1 = run_regression(_plan(2, 3), bench)
    _, d2 = run_regression(_plan(1, 3, seed=4), bench)
    c = concat([d1, d2])
    assert c.test_index.tolist() == [0, 0, 0, 1, 1, 1, 2, 2, 2]
