"""Covergroups, coverbins and hit accounting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from coverloop.errors import ConfigError
from coverloop.stimulus import FieldSpec, Range, StimulusRecord


@dataclass(frozen=True)
class CoverBin:
    """Conjunction of inclusive per-field ranges."""

    name: str
    conjuncts: tuple[tuple[str, Range], ...]

    def __post_init__(self):
        if not self.conjuncts:
            raise ConfigError(f"bin {self.name!r} has no conjuncts")
        for fname, (lo, hi) in self.conjuncts:
            if lo > hi:
                raise ConfigError(f"bin {self.name!r}: empty range on {fname!r}")

    @classmethod
    def of(cls, name: str, **when: Range) -> "CoverBin":
        return cls(name, tuple(when.items()))

    @property
    def fields(self) -> tuple[str, ...]:
        return tuple(f for f, _ in self.conjuncts)

    def range_of(self, fname: str) -> Range | None:
        for f, r in self.conjuncts:
            if f == fname:
                return r
        return None

    def matches(self, rec: Mapping) -> bool:
        for fname, (lo, hi) in self.conjuncts:
            try:
                v = rec[fname]
            except KeyError:
                raise ConfigError(f"bin {self.name!r} needs field {fname!r} missing from record") from None
            if not lo <= v <= hi:
                return False
        return True


@dataclass(frozen=True)
class CoverGroup:
    bins: tuple[CoverBin, ...]

    def __post_init__(self):
        names = [b.name for b in self.bins]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate bin names in covergroup")

    @property
    def names(self) -> list[str]:
        return [b.name for b in self.bins]

    def __getitem__(self, name: str) -> CoverBin:
        for b in self.bins:
            if b.name == name:
                return b
        raise KeyError(name)

    def __len__(self):
        return len(self.bins)

    def validate(self, specs: Sequence[FieldSpec]) -> None:
        if not self.bins:
            raise ConfigError("covergroup has no bins")
        by_name = {s.name: s for s in specs}
        for b in self.bins:
            for fname, (lo, hi) in b.conjuncts:
                spec = by_name.get(fname)
                if spec is None:
                    raise ConfigError(f"bin {b.name!r} references unknown field {fname!r}")
                if lo < spec.lo or hi > spec.hi:
                    raise ConfigError(
                        f"bin {b.name!r}: [{lo}, {hi}] on {fname!r} outside domain [{spec.lo}, {spec.hi}]"
                    )

    def to_dict(self) -> dict:
        return {"bins": [{"name": b.name, "when": {f: [lo, hi] for f, (lo, hi) in b.conjuncts}} for b in self.bins]}

    @classmethod
    def from_dict(cls, doc: Mapping, specs: Sequence[FieldSpec] | None = None) -> "CoverGroup":
        try:
            raw_bins = doc["bins"]
            bins = []
            for entry in raw_bins:
                conj = []
                for fname, (lo, hi) in entry["when"].items():
                    conj.append((fname, (lo, hi)))
                bins.append(CoverBin(str(entry["name"]), tuple(conj)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed covergroup document: {exc!r}") from None
        group = cls(tuple(bins))
        if specs is not None:
            group.validate(specs)
        return group

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def load_covergroup(path: str | Path, specs: Sequence[FieldSpec]) -> CoverGroup:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"covergroup file not found: {path}") from None
    except (json.JSONDecodeError, IsADirectoryError) as exc:
        raise ConfigError(f"{path}: unreadable covergroup ({exc})") from None
    return CoverGroup.from_dict(doc, specs)


@dataclass
class CoverGroupState:
    group: CoverGroup
    hits: list[int] = field(default_factory=list)
    samples: int = 0

    def __post_init__(self):
        if not self.hits:
            self.hits = [0] * len(self.group.bins)
        elif len(self.hits) != len(self.group.bins):
            raise ConfigError("hit vector length does not match bin count")

    def sample(self, rec: StimulusRecord) -> tuple[int, ...]:
        """Evaluate every bin on ``rec``, update counters, return the 0/1 hit vector."""
        vec = tuple(int(b.matches(rec)) for b in self.group.bins)
        for i, h in enumerate(vec):
            self.hits[i] += h
        self.samples += 1
        return vec

    def covered(self) -> list[str]:
        return [b.name for b, h in zip(self.group.bins, self.hits) if h > 0]

    def missed(self) -> list[str]:
        return [b.name for b, h in zip(self.group.bins, self.hits) if h == 0]

    def copy(self) -> "CoverGroupState":
        return CoverGroupState(self.group, list(self.hits), self.samples)

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "hits": {b.name: h for b, h in zip(self.group.bins, self.hits)},
        }


def sample(state: CoverGroupState, rec: StimulusRecord) -> tuple[CoverGroupState, tuple[int, ...]]:
    """Functional form of :meth:`CoverGroupState.sample`; ``state`` is left untouched."""
    new = state.copy()
    vec = new.sample(rec)
    return new, vec


def merge(states: Iterable[CoverGroupState]) -> CoverGroupState:
    states = list(states)
    if not states:
        raise ConfigError("nothing to merge")
    group = states[0].group
    out = CoverGroupState(group)
    for s in states:
        if s.group.names != group.names:
            raise ConfigError("cannot merge coverage over different bin lists")
        for i, h in enumerate(s.hits):
            out.hits[i] += h
        out.samples += s.samples
    return out


def coverage_pct(state: CoverGroupState) -> float:
    if not state.group.bins:
        raise ConfigError("coverage of a covergroup with zero bins is undefined")
    covered = sum(1 for h in state.hits if h > 0)
    return 100.0 * covered / len(state.group.bins)
