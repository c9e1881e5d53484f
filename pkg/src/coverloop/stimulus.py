"""Constrained randomization of stimulus fields.

Generation is driven by a counter-based splitmix64 stream so that a seed
fully determines every value on every platform.  REAL values are rounded to
six decimals at draw time; the rounded value is what the DUV sees and what
lands in the dataset file.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from coverloop.errors import ConfigError

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
REAL_DECIMALS = 6

INT = "int"
REAL = "real"

Value = int | float
StimulusRecord = dict[str, Value]


def splitmix64(z: int) -> int:
    """splitmix64 output mix; a bijection on 64-bit integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class Rng:
    """Counter-based splitmix64 stream.

    The n-th output is ``splitmix64(seed + n * GOLDEN_GAMMA)``, so the state
    is just ``(seed, counter)`` and two generators built from the same seed
    replay bit-identically.
    """

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int):
        if seed < 0 or seed > MASK64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return splitmix64(self.seed + self.counter * GOLDEN_GAMMA)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        limit = ((MASK64 + 1) // n) * n
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def integer(self, lo: int, hi: int) -> int:
        return lo + self.below(hi - lo + 1)

    def uniform(self) -> float:
        """Uniform double in ``[0, 1)`` with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def real(self, lo: float, hi: float) -> float:
        """Uniform real in ``[lo, hi]`` rounded to the logging resolution."""
        lo6, hi6 = snap_real_range(lo, hi)
        v = round(lo + self.uniform() * (hi - lo), REAL_DECIMALS)
        return min(max(v, lo6), hi6)


def snap_real_range(lo: float, hi: float) -> tuple[float, float]:
    """Shrink ``[lo, hi]`` onto the 6-decimal grid; a sub-grid range collapses to one point."""
    scale = 10**REAL_DECIMALS
    lo6 = math.ceil(round(lo * scale, 3)) / scale
    hi6 = math.floor(round(hi * scale, 3)) / scale
    if lo6 > hi6:
        lo6 = hi6 = round(lo, REAL_DECIMALS)
    return lo6, hi6


def seed_schedule(master_seed: int, n: int) -> list[int]:
    """Per-test seeds derived from one master seed; pairwise distinct for any n < 2**64."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = Rng(master_seed)
    return [rng.next_u64() for _ in range(n)]


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: str
    lo: Value
    hi: Value

    def __post_init__(self):
        if self.kind not in (INT, REAL):
            raise ConfigError(f"field {self.name!r}: unknown kind {self.kind!r}")
        if self.lo > self.hi:
            raise ConfigError(f"field {self.name!r}: empty domain [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return float(self.hi - self.lo)

    def coerce(self, v) -> Value:
        return int(v) if self.kind == INT else float(v)


Range = tuple[Value, Value]


def _range_width(kind: str, r: Range) -> float:
    lo, hi = r
    return (hi - lo + 1) if kind == INT else (hi - lo)


@dataclass
class ConstraintSet:
    """Per-field unions of inclusive sub-ranges. Absent fields use their full domain."""

    ranges: dict[str, list[Range]] = field(default_factory=dict)

    def __contains__(self, name: str) -> bool:
        return name in self.ranges

    def get(self, name: str) -> list[Range] | None:
        return self.ranges.get(name)

    def validate(self, specs: Sequence[FieldSpec]) -> None:
        by_name = {s.name: s for s in specs}
        for name, subs in self.ranges.items():
            spec = by_name.get(name)
            if spec is None:
                raise ConfigError(f"constraint references unknown field {name!r}")
            if not subs:
                raise ConfigError(f"constraint on {name!r} has no sub-ranges")
            for lo, hi in subs:
                if lo > hi:
                    raise ConfigError(f"constraint on {name!r}: empty range [{lo}, {hi}]")
                if lo < spec.lo or hi > spec.hi:
                    raise ConfigError(
                        f"constraint on {name!r}: [{lo}, {hi}] outside domain [{spec.lo}, {spec.hi}]"
                    )

    def to_dict(self) -> dict:
        return {name: [[lo, hi] for lo, hi in subs] for name, subs in self.ranges.items()}

    @classmethod
    def from_dict(cls, doc: Mapping, specs: Sequence[FieldSpec] | None = None) -> "ConstraintSet":
        if not isinstance(doc, Mapping):
            raise ConfigError("constraint document must be a JSON object")
        kinds = {s.name: s for s in specs} if specs else {}
        ranges: dict[str, list[Range]] = {}
        for name, subs in doc.items():
            if not isinstance(subs, list) or not all(
                isinstance(r, (list, tuple)) and len(r) == 2 for r in subs
            ):
                raise ConfigError(f"constraint on {name!r} must be a list of [lo, hi] pairs")
            spec = kinds.get(name)
            conv = spec.coerce if spec else (lambda v: v)
            ranges[name] = [(conv(lo), conv(hi)) for lo, hi in subs]
        cs = cls(ranges)
        if specs is not None:
            cs.validate(specs)
        return cs

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def load_constraints(path: str | Path, specs: Sequence[FieldSpec]) -> ConstraintSet:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"constraints file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return ConstraintSet.from_dict(doc, specs)


def _pick_range(kind: str, subs: list[Range], rng: Rng) -> Range:
    if len(subs) == 1:
        return subs[0]
    if kind == INT:
        widths = [_range_width(kind, r) for r in subs]
        u = rng.below(sum(widths))
        for r, w in zip(subs, widths):
            if u < w:
                return r
            u -= w
        raise AssertionError("unreachable")
    widths = [_range_width(kind, r) for r in subs]
    total = sum(widths)
    if total <= 0:
        return subs[rng.below(len(subs))]
    u = rng.uniform() * total
    for r, w in zip(subs, widths):
        if u < w:
            return r
        u -= w
    return subs[-1]


def draw_value(spec: FieldSpec, subs: list[Range] | None, rng: Rng) -> Value:
    lo, hi = _pick_range(spec.kind, subs, rng) if subs else (spec.lo, spec.hi)
    if spec.kind == INT:
        return rng.integer(int(lo), int(hi))
    return rng.real(float(lo), float(hi))


def randomize(cs: ConstraintSet, specs: Sequence[FieldSpec], rng: Rng) -> StimulusRecord:
    """Draw one record; fields are drawn in ``specs`` order."""
    names = {s.name for s in specs}
    for name in cs.ranges:
        if name not in names:
            raise ConfigError(f"constraint references unknown field {name!r}")
    return {s.name: draw_value(s, cs.get(s.name), rng) for s in specs}


def derive_seed(base: int, *labels) -> int:
    """Stable 64-bit seed from a base seed and any labels (names, indices)."""
    text = ":".join([str(base), *map(str, labels)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")
