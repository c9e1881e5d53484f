"""Duplicate removal and per-bin choice of the dependent stimulus field."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from coverloop.coverage import CoverGroup
from coverloop.runner import Dataset

# |r| values closer than this are treated as a tie
TIE_TOL = 1e-12


class ZeroVarianceError(ValueError):
    pass


class NotLearnable(ValueError):
    pass


def dedupe(ds: Dataset) -> Dataset:
    """Drop repeated rows, keeping first occurrences in order. ``test_index`` is ignored."""
    if len(ds) == 0:
        return ds
    content = np.hstack([ds.values, ds.hits.astype(np.float64)])
    _, first = np.unique(content, axis=0, return_index=True)
    return ds.take(np.sort(first))


def correlation(x, y) -> float:
    """Pearson product-moment correlation."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("columns must be 1-D and of equal length")
    if len(x) < 2:
        raise ValueError("need at least two samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0 or np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ZeroVarianceError("zero-variance column")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


@dataclass(frozen=True)
class Assignment:
    bin: str
    dependent: str
    independents: tuple[str, ...]
    r: float

    def to_dict(self) -> dict:
        return {"dependent": self.dependent, "independents": list(self.independents), "r": self.r}


def select_variables(ds: Dataset, bin_name: str) -> Assignment:
    """Pick the stimulus field with the largest |r| against the bin's hit column.

    Ties go to the lower field index; zero-variance fields are skipped.
    """
    target = ds.column(bin_name)
    if len(ds) < 2 or np.ptp(target) == 0:
        raise NotLearnable("bin column is constant")
    best, best_r = None, 0.0
    for name in ds.field_names:
        try:
            r = correlation(ds.column(name), target)
        except ZeroVarianceError:
            continue
        if best is None or abs(r) > abs(best_r) + TIE_TOL:
            best, best_r = name, r
    if best is None:
        raise NotLearnable("every stimulus field has zero variance")
    others = tuple(n for n in ds.field_names if n != best)
    return Assignment(bin_name, best, others, best_r)


@dataclass
class PreparedDataset:
    rows: Dataset
    assignments: dict[str, Assignment] = field(default_factory=dict)
    excluded: dict[str, str] = field(default_factory=dict)
    n_raw: int = 0

    def report(self) -> dict:
        bins = {}
        for name in self.rows.bins:
            if name in self.assignments:
                bins[name] = self.assignments[name].to_dict()
            elif name in self.excluded:
                bins[name] = {"excluded": self.excluded[name]}
        return {"rows_raw": self.n_raw, "rows_deduped": len(self.rows), "bins": bins}

    def dumps(self) -> str:
        return json.dumps(self.report(), indent=2) + "\n"


def prepare(ds: Dataset, bins: Sequence[str] | CoverGroup | None = None) -> PreparedDataset:
    if isinstance(bins, CoverGroup):
        bins = bins.names
    rows = dedupe(ds)
    out = PreparedDataset(rows, n_raw=len(ds))
    for name in bins if bins is not None else ds.bins:
        try:
            out.assignments[name] = select_variables(rows, name)
        except NotLearnable as exc:
            out.excluded[name] = f"bin not learnable: {exc}"
    return out
