"""Regression execution and the stimulus/coverbin dataset file."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from coverloop.coverage import CoverGroupState, coverage_pct, merge
from coverloop.errors import ConfigError, ParseError
from coverloop.stimulus import INT, ConstraintSet, FieldSpec, Rng, draw_value, seed_schedule
from coverloop.testbench import Testbench


@dataclass
class TestSpec:
    """A named test. With several constraint sets, each transaction picks one uniformly."""

    name: str
    constraints: tuple[ConstraintSet, ...]
    transactions: int
    targets: tuple[str, ...] = ()

    __test__ = False

    def to_dict(self) -> dict:
        doc: dict = {"name": self.name, "transactions": self.transactions}
        if len(self.constraints) == 1:
            doc["constraints"] = self.constraints[0].to_dict()
        else:
            doc["sequence"] = [cs.to_dict() for cs in self.constraints]
        if self.targets:
            doc["targets"] = list(self.targets)
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping, specs: Sequence[FieldSpec] | None = None) -> "TestSpec":
        try:
            if "sequence" in doc:
                seq = tuple(ConstraintSet.from_dict(c, specs) for c in doc["sequence"])
            else:
                seq = (ConstraintSet.from_dict(doc.get("constraints", {}), specs),)
            return cls(str(doc["name"]), seq, int(doc["transactions"]), tuple(doc.get("targets", ())))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed test entry: {exc!r}") from None


@dataclass
class RegressionPlan:
    duv: str
    tests: list[TestSpec]
    master_seed: int

    def validate(self, bench: Testbench) -> None:
        if self.duv != bench.name:
            raise ConfigError(f"plan is for DUV {self.duv!r}, testbench is {bench.name!r}")
        names = [t.name for t in self.tests]
        if len(set(names)) != len(names):
            raise ConfigError("test names in a plan must be unique")
        for t in self.tests:
            if t.transactions < 1:
                raise ConfigError(f"test {t.name!r}: transactions must be >= 1")
            if not t.constraints:
                raise ConfigError(f"test {t.name!r} has no constraint set")
            for cs in t.constraints:
                cs.validate(bench.fields)

    def to_dict(self) -> dict:
        return {
            "duv": self.duv,
            "master_seed": self.master_seed,
            "tests": [t.to_dict() for t in self.tests],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping, specs: Sequence[FieldSpec] | None = None) -> "RegressionPlan":
        try:
            return cls(
                str(doc["duv"]),
                [TestSpec.from_dict(t, specs) for t in doc["tests"]],
                int(doc["master_seed"]),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed regression plan: {exc!r}") from None

    @classmethod
    def load(cls, path: str | Path, specs: Sequence[FieldSpec] | None = None) -> "RegressionPlan":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(doc, specs)


def original_plan(
    bench: Testbench,
    base: ConstraintSet | None = None,
    tests: int | None = None,
    txns: int | None = None,
    master_seed: int = 1,
) -> RegressionPlan:
    """N copies of the base random test, each of which will get its own seed."""
    base = base or ConstraintSet()
    n = bench.default_tests if tests is None else tests
    m = bench.default_txns if txns is None else txns
    plan = RegressionPlan(
        bench.name,
        [TestSpec(f"random_{i:04d}", (base,), m) for i in range(n)],
        master_seed,
    )
    plan.validate(bench)
    return plan


# --- dataset -----------------------------------------------------------------


@dataclass
class Dataset:
    """Per-transaction stimulus values joined with per-bin hit flags."""

    fields: tuple[FieldSpec, ...]
    bins: tuple[str, ...]
    test_index: np.ndarray
    values: np.ndarray
    hits: np.ndarray

    def __post_init__(self):
        n = len(self.test_index)
        self.test_index = np.asarray(self.test_index, dtype=np.int64).reshape(n)
        self.values = np.asarray(self.values, dtype=np.float64).reshape(n, len(self.fields))
        self.hits = np.asarray(self.hits, dtype=np.uint8).reshape(n, len(self.bins))

    @classmethod
    def empty(cls, fields: Sequence[FieldSpec], bins: Sequence[str]) -> "Dataset":
        return cls(tuple(fields), tuple(bins), np.zeros(0), np.zeros((0, len(fields))), np.zeros((0, len(bins))))

    def __len__(self) -> int:
        return len(self.test_index)

    @property
    def field_names(self) -> list[str]:
        return [f.name for f in self.fields]

    def column(self, name: str) -> np.ndarray:
        names = self.field_names
        if name in names:
            return self.values[:, names.index(name)]
        return self.hits[:, list(self.bins).index(name)].astype(np.float64)

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.fields, self.bins, self.test_index[idx], self.values[idx], self.hits[idx])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.field_names == other.field_names
            and tuple(self.bins) == tuple(other.bins)
            and np.array_equal(self.test_index, other.test_index)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.hits, other.hits)
        )

    def header(self) -> list[str]:
        return ["test_index", *self.field_names, *self.bins]


def concat(datasets: Sequence[Dataset], renumber: bool = True) -> Dataset:
    """Stack datasets; with ``renumber`` later test indices are shifted past earlier ones."""
    first = datasets[0]
    idx, offset = [], 0
    for d in datasets:
        if d.field_names != first.field_names or tuple(d.bins) != tuple(first.bins):
            raise ConfigError("cannot concatenate datasets with different columns")
        idx.append(d.test_index + offset if renumber else d.test_index)
        if renumber and len(d):
            offset = int(idx[-1].max()) + 1
    return Dataset(
        first.fields,
        first.bins,
        np.concatenate(idx),
        np.concatenate([d.values for d in datasets]),
        np.concatenate([d.hits for d in datasets]),
    )


def _fmt(spec: FieldSpec, v: float) -> str:
    if spec.kind == INT:
        return str(int(v))
    return f"{v + 0.0:.6f}"


def format_dataset(ds: Dataset) -> str:
    buf = io.StringIO()
    buf.write(",".join(ds.header()) + "\n")
    for t, vals, flags in zip(ds.test_index.tolist(), ds.values.tolist(), ds.hits.tolist()):
        cells = [str(t)]
        cells += [_fmt(s, v) for s, v in zip(ds.fields, vals)]
        cells += ["1" if h else "0" for h in flags]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def write_dataset(ds: Dataset, path: str | Path) -> None:
    Path(path).write_text(format_dataset(ds), encoding="utf-8", newline="\n")


def read_dataset(path: str | Path, fields: Sequence[FieldSpec]) -> Dataset:
    """Parse a dataset file; bin columns are whatever follows the field columns."""
    fields = tuple(fields)
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty dataset file (no header)", line=1) from None
    names = [f.name for f in fields]
    if header[: 1 + len(names)] != ["test_index", *names]:
        raise ParseError(f"header must start with test_index,{','.join(names)}", line=1)
    bins = tuple(header[1 + len(names) :])
    ncol = len(header)
    idx, vals, hits = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != ncol:
            raise ParseError(f"expected {ncol} columns, found {len(row)}", line=lineno)
        try:
            idx.append(int(row[0]))
            vals.append([float(int(c)) if s.kind == INT else float(c) for s, c in zip(fields, row[1 : 1 + len(names)])])
            flags = [int(c) for c in row[1 + len(names) :]]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if any(h not in (0, 1) for h in flags):
            raise ParseError("bin flags must be 0 or 1", line=lineno)
        hits.append(flags)
    n = len(idx)
    return Dataset(fields, bins, np.array(idx), np.array(vals).reshape(n, len(fields)), np.array(hits).reshape(n, len(bins)))


# --- execution ---------------------------------------------------------------


@dataclass
class RegressionSummary:
    n_test_runs: int
    wall_time: float
    merged_coverage: CoverGroupState
    coverage_pct: float
    coverage_curve: list[tuple[int, float]] = field(default_factory=list)
    scoreboard_errors: int = 0

    def to_dict(self) -> dict:
        return {
            "n_test_runs": self.n_test_runs,
            "wall_time": self.wall_time,
            "coverage_pct": self.coverage_pct,
            "coverage_curve": [list(p) for p in self.coverage_curve],
            "scoreboard_errors": self.scoreboard_errors,
            "coverage": self.merged_coverage.to_dict(),
        }


def run_regression(plan: RegressionPlan, bench: Testbench) -> tuple[RegressionSummary, Dataset]:
    """Simulate every test of ``plan`` and collect one dataset row per transaction."""
    plan.validate(bench)
    group = bench.covergroup
    specs = bench.fields
    seeds = seed_schedule(plan.master_seed, len(plan.tests))

    idx_rows: list[int] = []
    val_rows: list[list[float]] = []
    hit_rows: list[tuple[int, ...]] = []
    merged = CoverGroupState(group)
    curve: list[tuple[int, float]] = []
    errors = 0

    start = time.perf_counter()
    for ti, (test, seed) in enumerate(zip(plan.tests, seeds)):
        rng = Rng(seed)
        state = CoverGroupState(group)
        seq = [[cs.get(s.name) for s in specs] for cs in test.constraints]
        for _ in range(test.transactions):
            subs = seq[0] if len(seq) == 1 else seq[rng.below(len(seq))]
            rec = {s.name: draw_value(s, r, rng) for s, r in zip(specs, subs)}
            if not bench.step(rec):
                errors += 1
            hit_rows.append(state.sample(rec))
            idx_rows.append(ti)
            val_rows.append([rec[s.name] for s in specs])
        merged = merge([merged, state])
        curve.append((ti + 1, coverage_pct(merged)))
    wall = time.perf_counter() - start

    n = len(idx_rows)
    ds = Dataset(
        specs,
        tuple(group.names),
        np.array(idx_rows),
        np.array(val_rows, dtype=np.float64).reshape(n, len(specs)),
        np.array(hit_rows, dtype=np.uint8).reshape(n, len(group.bins)),
    )
    summary = RegressionSummary(len(plan.tests), wall, merged, coverage_pct(merged), curve, errors)
    return summary, ds
