"""Stage functions over an artifact directory, and the closed loop that chains them.

Every stage reads its inputs from files written by earlier stages, so a
stage-by-stage run and the first iteration of the closed loop produce the
same bytes for every artifact that does not record wall-clock time.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
from dataclasses import asdict, dataclass, field
from pathlib import Path

from coverloop.coverage import CoverGroup, load_covergroup
from coverloop.dataprep import prepare
from coverloop.errors import ConfigError
from coverloop.metrics import REGAIN_TARGET, MetricsEntry, emit_report, format_curve_csv
from coverloop.ml import ALGORITHMS, BinModel, parse_algorithms, train_per_bin
from coverloop.runner import RegressionPlan, concat, original_plan, read_dataset, run_regression, write_dataset
from coverloop.stimulus import ConstraintSet, derive_seed, load_constraints
from coverloop.synth import (
    DEFAULT_MARGIN,
    DEFAULT_MISS_TOL,
    PER_BIN,
    POOLED,
    build_directives,
    dump_directives,
    emit_optimized_plan,
)
from coverloop.testbench import Testbench, get_bench

log = logging.getLogger(__name__)

DEFAULT_OUT = "coverloop_out"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_LOOP_CAP = 3


class MissingArtifact(ConfigError):
    def __init__(self, path: Path, stage: str):
        super().__init__(f"{path} not found: run stage '{stage}' first")


@dataclass
class RunConfig:
    duv: str = "alu"
    covergroup: str | None = None
    constraints: str | None = None
    tests: int | None = None
    txns: int | None = None
    seed: int = 1
    algos: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    max_iters: int = 5
    only_missed: bool = False
    margin: float = DEFAULT_MARGIN
    per_bin: bool = False
    miss_tol: float = DEFAULT_MISS_TOL
    iteration: int = 1

    def validate(self) -> None:
        get_bench(self.duv)
        self.algos = parse_algorithms(self.algos)
        if self.max_iters < 1:
            raise ConfigError("--max-iters must be >= 1")
        if not 0.0 <= self.margin <= 0.5:
            raise ConfigError("--margin must be in [0, 0.5]")
        if self.tests is not None and self.tests < 1:
            raise ConfigError("--tests must be >= 1")
        if self.txns is not None and self.txns < 1:
            raise ConfigError("--txns must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")

    def dumps(self) -> str:
        # the loop cap is not a stage input, so it stays out of stage artifacts
        doc = {k: v for k, v in asdict(self).items() if k != "max_iters"}
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def load(cls, out: Path) -> "RunConfig":
        path = out / "config.json"
        if not path.exists():
            raise MissingArtifact(path, "run")
        return cls(**json.loads(path.read_text()))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _need(path: Path, stage: str) -> Path:
    if not path.exists():
        raise MissingArtifact(path, stage)
    return path


def _bench(out: Path, cfg: RunConfig) -> Testbench:
    bench = get_bench(cfg.duv)
    group = CoverGroup.from_dict(json.loads(_need(out / "covergroup.json", "run").read_text()), bench.fields)
    return bench.with_covergroup(group)


def _curve_csv(summary) -> str:
    return format_curve_csv(summary.coverage_curve)


# --- stages --------------------------------------------------------------------


def stage_run(cfg: RunConfig, out: Path) -> dict:
    """Original random regression. Inputs are all checked before anything is written."""
    cfg.validate()
    bench = get_bench(cfg.duv)
    if cfg.covergroup:
        bench = bench.with_covergroup(load_covergroup(cfg.covergroup, bench.fields))
    bench.covergroup.validate(bench.fields)
    base = load_constraints(cfg.constraints, bench.fields) if cfg.constraints else ConstraintSet()
    plan = original_plan(bench, base, cfg.tests, cfg.txns, cfg.seed)
    summary, ds = run_regression(plan, bench)

    out.mkdir(parents=True, exist_ok=True)
    _write(out / "config.json", cfg.dumps())
    _write(out / "covergroup.json", bench.covergroup.dumps())
    _write(out / "plan_original.json", plan.dumps())
    write_dataset(ds, out / "dataset.csv")
    _write(out / "summary_original.json", json.dumps(summary.to_dict(), indent=2) + "\n")
    _write(out / "curve_original.csv", _curve_csv(summary))
    log.info("original: %d tests, %d rows, coverage %.2f%%", summary.n_test_runs, len(ds), summary.coverage_pct)
    return summary.to_dict()


def _load_training(out: Path, cfg: RunConfig):
    bench = _bench(out, cfg)
    ds = read_dataset(_need(out / "dataset.csv", "run"), bench.fields)
    if list(ds.bins) != bench.covergroup.names:
        raise ConfigError("dataset bins do not match covergroup.json")
    return bench, ds


def stage_prepare(out: Path) -> dict:
    cfg = RunConfig.load(out)
    bench, ds = _load_training(out, cfg)
    prepared = prepare(ds, bench.covergroup)
    _write(out / "prep_report.json", prepared.dumps())
    return prepared.report()


def stage_train(out: Path, algos: list[str] | None = None) -> dict[str, int]:
    cfg = RunConfig.load(out)
    _need(out / "prep_report.json", "prepare")
    bench, ds = _load_training(out, cfg)
    prepared = prepare(ds, bench.covergroup)
    counts = {}
    for alg in parse_algorithms(algos or cfg.algos):
        models, excluded = train_per_bin(prepared, alg, seed=cfg.seed)
        mdir = out / "models" / alg
        if mdir.exists():
            shutil.rmtree(mdir)
        mdir.mkdir(parents=True)
        for name, m in models.items():
            _write(mdir / f"{name}.json", m.dumps())
        _write(mdir / "excluded.json", json.dumps(excluded, indent=2) + "\n")
        counts[alg] = len(models)
    return counts


def _targets(out: Path, cfg: RunConfig, group: CoverGroup) -> list[str]:
    if not cfg.only_missed:
        return group.names
    summary = json.loads(_need(out / "summary_original.json", "run").read_text())
    hits = summary["coverage"]["hits"]
    return [b for b in group.names if hits.get(b, 0) == 0]


def stage_synthesize(out: Path, algos: list[str] | None = None, margin: float | None = None) -> dict[str, int]:
    cfg = RunConfig.load(out)
    bench = _bench(out, cfg)
    base = RegressionPlan.load(_need(out / "plan_original.json", "run"), bench.fields)
    margin = cfg.margin if margin is None else margin
    targets = _targets(out, cfg, bench.covergroup)
    sizes = {}
    for alg in parse_algorithms(algos or cfg.algos):
        mdir = _need(out / "models" / alg, "train")
        models = {}
        for name in targets:
            p = mdir / f"{name}.json"
            if p.exists():
                models[name] = BinModel.load(p)
        query_seed = derive_seed(cfg.seed, "iteration", cfg.iteration)
        directives = build_directives(models, bench.covergroup, bench.fields, alg, margin, query_seed, targets)
        mode = PER_BIN if cfg.per_bin else POOLED
        plan = emit_optimized_plan(
            directives, base, alg, bench.fields, targets, mode, cfg.miss_tol, cfg.iteration
        )
        _write(out / f"directives_{alg}.json", dump_directives(directives))
        _write(out / f"optimized_plan_{alg}.json", plan.dumps())
        sizes[alg] = len(plan.tests)
    return sizes


def stage_simulate(out: Path, algos: list[str] | None = None) -> dict[str, float]:
    cfg = RunConfig.load(out)
    bench = _bench(out, cfg)
    cov = {}
    for alg in parse_algorithms(algos or cfg.algos):
        plan = RegressionPlan.load(_need(out / f"optimized_plan_{alg}.json", "synthesize"), bench.fields)
        summary, ds = run_regression(plan, bench)
        d = out / f"optimized_{alg}"
        d.mkdir(parents=True, exist_ok=True)
        write_dataset(ds, d / "dataset.csv")
        _write(d / "summary.json", json.dumps(summary.to_dict(), indent=2) + "\n")
        _write(d / "curve.csv", _curve_csv(summary))
        cov[alg] = summary.coverage_pct
    return cov


def stage_report(out: Path, algos: list[str] | None = None) -> list[MetricsEntry]:
    cfg = RunConfig.load(out)
    orig = json.loads(_need(out / "summary_original.json", "run").read_text())
    entries, curves = [], {}
    for alg in parse_algorithms(algos or cfg.algos):
        opt = json.loads(_need(out / f"optimized_{alg}" / "summary.json", "simulate").read_text())
        entries.append(
            MetricsEntry(
                cfg.duv,
                alg,
                orig["n_test_runs"],
                opt["n_test_runs"],
                orig["wall_time"],
                opt["wall_time"],
                orig["coverage_pct"],
                opt["coverage_pct"],
            )
        )
        curves[(cfg.duv, alg)] = [tuple(p) for p in opt["coverage_curve"]]
    emit_report(entries, out, curves)
    return entries


def best_entry(entries: list[MetricsEntry]) -> MetricsEntry:
    """Highest regain; ties go to fewer optimized tests, then to list order."""
    return min(enumerate(entries), key=lambda ie: (-ie[1].regain, ie[1].n_opt, ie[0]))[1]


def run_iteration(out: Path, algos: list[str] | None = None) -> list[MetricsEntry]:
    stage_prepare(out)
    stage_train(out, algos)
    stage_synthesize(out, algos)
    stage_simulate(out, algos)
    return stage_report(out, algos)


# --- closed loop ---------------------------------------------------------------


@dataclass
class LoopResult:
    converged: bool
    iterations: int
    best: list[dict]

    @property
    def exit_code(self) -> int:
        return EXIT_OK if self.converged else EXIT_LOOP_CAP


_BASELINE = ("covergroup.json", "plan_original.json", "summary_original.json", "curve_original.csv")


def closed_loop(cfg: RunConfig, out: Path) -> LoopResult:
    """Repeat prepare/train/synthesize/simulate until the best regain reaches the target.

    Each later iteration trains on the previous training rows plus the rows
    produced by the previous iteration's best optimized regression. The
    original regression and its metrics stay the baseline throughout.
    """
    cfg.validate()
    out.mkdir(parents=True, exist_ok=True)
    history = []
    prev: Path | None = None
    converged = False
    for it in range(1, cfg.max_iters + 1):
        d = out / f"iter_{it:02d}"
        if prev is None:
            stage_run(cfg, d)
        else:
            d.mkdir(parents=True, exist_ok=True)
            for name in _BASELINE:
                shutil.copyfile(prev / name, d / name)
            _write(d / "config.json", RunConfig(**{**asdict(cfg), "iteration": it}).dumps())
            best_alg = history[-1]["algorithm"]
            bench = _bench(d, cfg)
            merged = concat(
                [
                    read_dataset(prev / "dataset.csv", bench.fields),
                    read_dataset(prev / f"optimized_{best_alg}" / "dataset.csv", bench.fields),
                ]
            )
            write_dataset(merged, d / "dataset.csv")
        entries = run_iteration(d)
        best = best_entry(entries)
        targets = _targets(d, RunConfig.load(d), _bench(d, cfg).covergroup)
        history.append({"iteration": it, **best.to_dict(), "targets": len(targets)})
        log.info("iteration %d: best %s regain %.2f", it, best.algorithm, best.regain)
        if best.regain >= REGAIN_TARGET or not targets:
            converged = True
            break
        prev = d
    result = LoopResult(converged, len(history), history)
    doc = {"converged": converged, "iterations": len(history), "regain_target": REGAIN_TARGET, "history": history}
    _write(out / "loop_summary.json", json.dumps(doc, indent=2) + "\n")
    last = out / f"iter_{len(history):02d}"
    for name in os.listdir(last):
        if name.startswith("report") or name.startswith("coverage_curve_"):
            shutil.copyfile(last / name, out / name)
    return result
