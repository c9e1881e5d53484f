"""Turn per-bin model predictions into directed constraint sets and a test plan."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from coverloop.coverage import CoverBin, CoverGroup
from coverloop.errors import ConfigError
from coverloop.ml import BinModel
from coverloop.runner import RegressionPlan, TestSpec
from coverloop.stimulus import INT, ConstraintSet, FieldSpec, Range, Rng, derive_seed, draw_value

QUERY_ROWS = 64
DEFAULT_MARGIN = 0.02
DEFAULT_MISS_TOL = 1e-3

POOLED = "pooled"
PER_BIN = "per-bin"


@dataclass(frozen=True)
class BinDirective:
    """Constraint recipe for one bin: a predicted range on the dependent field plus fixed ranges."""

    bin: str
    dependent: str
    range: Range
    fixed: tuple[tuple[str, Range], ...]
    algorithm: str
    model_id: str | None
    fallback: bool = False

    def constraint_set(self) -> ConstraintSet:
        ranges = {f: [r] for f, r in self.fixed if f != self.dependent}
        ranges[self.dependent] = [self.range]
        return ConstraintSet(ranges)

    def to_dict(self) -> dict:
        return {
            "bin": self.bin,
            "dependent": self.dependent,
            "range": list(self.range),
            "fixed": {f: list(r) for f, r in self.fixed},
            "algorithm": self.algorithm,
            "model_id": self.model_id,
            "fallback": self.fallback,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "BinDirective":
        try:
            return cls(
                str(doc["bin"]),
                str(doc["dependent"]),
                tuple(doc["range"]),
                tuple((f, tuple(r)) for f, r in doc["fixed"].items()),
                str(doc["algorithm"]),
                doc.get("model_id"),
                bool(doc.get("fallback", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed directive: {exc!r}") from None


def dump_directives(directives: Sequence[BinDirective]) -> str:
    return json.dumps({"directives": [d.to_dict() for d in directives]}, indent=2) + "\n"


def load_directives(path: str | Path) -> list[BinDirective]:
    doc = json.loads(Path(path).read_text())
    return [BinDirective.from_dict(d) for d in doc["directives"]]


def _query_range(spec: FieldSpec, cb: CoverBin) -> Range:
    r = cb.range_of(spec.name)
    if r is None:
        return spec.lo, spec.hi
    lo, hi = max(r[0], spec.lo), min(r[1], spec.hi)
    if spec.kind == INT:
        lo, hi = math.ceil(lo), math.floor(hi)
    if lo > hi:
        raise ConfigError(f"bin {cb.name!r}: range on {spec.name!r} does not meet its domain")
    return lo, hi


def _to_field_range(spec: FieldSpec, lo: float, hi: float) -> Range:
    """Clip a real interval onto the field domain; INT fields get whole numbers."""
    lo = min(max(lo, spec.lo), spec.hi)
    hi = min(max(hi, spec.lo), spec.hi)
    if spec.kind != INT:
        return float(lo), float(hi)
    ilo, ihi = math.ceil(lo), math.floor(hi)
    if ilo > ihi:
        ilo = ihi = min(max(round(0.5 * (lo + hi)), spec.lo), spec.hi)
    return int(ilo), int(ihi)


def fallback_directive(cb: CoverBin, fields: Sequence[FieldSpec], algorithm: str) -> BinDirective:
    """Target the bin directly with its own conjunct ranges (used when no model exists)."""
    by_name = {s.name: s for s in fields}
    first, _ = cb.conjuncts[0]
    if first not in by_name:
        raise ConfigError(f"bin {cb.name!r} references unknown field {first!r}")
    fixed = tuple((f, _query_range(by_name[f], cb)) for f, _ in cb.conjuncts)
    return BinDirective(cb.name, first, fixed[0][1], fixed[1:], algorithm, None, fallback=True)


def predict_bin_constraint(
    model: BinModel | None,
    cb: CoverBin,
    fields: Sequence[FieldSpec],
    margin: float = DEFAULT_MARGIN,
    rng: Rng | None = None,
    queries: int = QUERY_ROWS,
    model_id: str | None = None,
    algorithm: str | None = None,
) -> BinDirective:
    """Query the bin's model with the hit flag raised and widen its predictions into a range."""
    if not 0.0 <= margin <= 0.5:
        raise ConfigError(f"margin must be in [0, 0.5], got {margin}")
    if model is None:
        return fallback_directive(cb, fields, algorithm or "none")
    if model.bin != cb.name:
        raise ConfigError(f"model is for bin {model.bin!r}, not {cb.name!r}")
    by_name = {s.name: s for s in fields}
    missing = [f for f in (model.dependent, *model.features[:-1]) if f not in by_name]
    if missing:
        raise ConfigError(f"model for {cb.name!r} uses unknown fields {missing}")
    rng = rng if rng is not None else Rng(derive_seed(0, cb.name))

    independents = model.features[:-1]
    qranges = [_query_range(by_name[f], cb) for f in independents]
    Q = np.empty((queries, len(independents) + 1))
    for i in range(queries):
        for j, f in enumerate(independents):
            Q[i, j] = draw_value(by_name[f], [qranges[j]], rng)
    Q[:, -1] = 1.0
    v = np.asarray(model.predict(Q), dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ConfigError(f"model for {cb.name!r} produced non-finite predictions")

    dep = by_name[model.dependent]
    m = margin * dep.width
    rng_dep = _to_field_range(dep, float(v.min()) - m, float(v.max()) + m)
    fixed = tuple(
        (f, _query_range(by_name[f], cb)) for f, _ in cb.conjuncts if f != model.dependent
    )
    return BinDirective(cb.name, model.dependent, rng_dep, fixed, model.algorithm if algorithm is None else algorithm, model_id)


def build_directives(
    models: Mapping[str, BinModel],
    group: CoverGroup,
    fields: Sequence[FieldSpec],
    algorithm: str,
    margin: float = DEFAULT_MARGIN,
    seed: int = 0,
    bins: Sequence[str] | None = None,
) -> list[BinDirective]:
    """One directive per bin, in covergroup order; bins without a model fall back to direct targeting."""
    wanted = group.names if bins is None else list(bins)
    out = []
    for name in wanted:
        cb = group[name]
        model = models.get(name)
        rng = Rng(derive_seed(seed, "query", algorithm, name))
        mid = f"{algorithm}/{name}" if model is not None else None
        out.append(predict_bin_constraint(model, cb, fields, margin, rng, model_id=mid, algorithm=algorithm))
    return out


def pooled_test_count(k: int, txns: int, miss_tol: float = DEFAULT_MISS_TOL) -> int:
    """Fewest tests so the expected number of never-drawn constraint sets is at most ``miss_tol``.

    Each transaction picks one of ``k`` sets uniformly, so after N tests of ``txns``
    transactions the expected count of sets never picked is ``k * (1 - 1/k)**(N*txns)``.
    """
    if k <= 0:
        return 0
    if k == 1:
        return 1
    if not 0.0 < miss_tol < 1.0:
        raise ConfigError(f"miss tolerance must be in (0, 1), got {miss_tol}")
    n = math.log(k / miss_tol) / (-txns * math.log1p(-1.0 / k))
    return max(1, math.ceil(n - 1e-12))


def emit_optimized_plan(
    directives: Sequence[BinDirective],
    base: RegressionPlan,
    algorithm: str,
    fields: Sequence[FieldSpec],
    targets: Sequence[str] | None = None,
    mode: str = POOLED,
    miss_tol: float = DEFAULT_MISS_TOL,
    iteration: int = 1,
) -> RegressionPlan:
    """Assemble the directed regression.

    ``per-bin`` emits one test ``directed_<bin>`` per targeted bin.  ``pooled``
    emits the fewest seeded tests whose transactions each draw one targeted
    bin's constraint set at random (see :func:`pooled_test_count`).
    """
    if mode not in (POOLED, PER_BIN):
        raise ConfigError(f"unknown plan mode {mode!r}")
    if not base.tests:
        raise ConfigError("base plan has no tests")
    names = {s.name for s in fields}
    by_bin = {d.bin: d for d in directives}
    wanted = [d.bin for d in directives] if targets is None else list(targets)
    for b in wanted:
        if b not in by_bin:
            raise ConfigError(f"no directive for targeted bin {b!r}")
    sets = []
    for b in wanted:
        d = by_bin[b]
        used = {d.dependent, *(f for f, _ in d.fixed)}
        if not used <= names:
            raise ConfigError(f"directive for {b!r} uses unknown fields {sorted(used - names)}")
        cs = d.constraint_set()
        cs.validate(fields)
        sets.append(cs)

    txns = base.tests[0].transactions
    seed = derive_seed(base.master_seed, algorithm, iteration)
    if mode == PER_BIN:
        tests = [TestSpec(f"directed_{b}", (cs,), txns, (b,)) for b, cs in zip(wanted, sets)]
    else:
        n = pooled_test_count(len(sets), txns, miss_tol)
        tests = [TestSpec(f"directed_{i:03d}", tuple(sets), txns, tuple(wanted)) for i in range(n)]
    return RegressionPlan(base.duv, tests, seed)
