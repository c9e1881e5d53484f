"""Regression comparison metrics and report files."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Sequence

REGAIN_TARGET = 99.0
METRICS = ("opt_test_runs", "opt_runtime", "coverage_regain")
RAW = ("n_orig", "n_opt", "t_orig", "t_opt", "c_orig", "c_opt")


def round2(x: float | None) -> float | None:
    """Round half away from zero at two decimals, on the shortest decimal repr of ``x``."""
    if x is None:
        return None
    return float(Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def opt_test_runs(n_orig: int, n_opt: int) -> float:
    if n_opt == 0:
        raise ZeroDivisionError("optimized regression ran no tests")
    return n_orig / n_opt


def opt_runtime(t_orig: float, t_opt: float) -> float:
    if t_opt <= 0:
        raise ZeroDivisionError("optimized run-time must be positive")
    return t_orig / t_opt


def coverage_regain(c_opt: float, c_orig: float) -> float:
    if c_orig == 0:
        raise ZeroDivisionError("original coverage is zero")
    # ratio first, so equal coverages give exactly 100
    return 100.0 * (c_opt / c_orig)


@dataclass
class MetricsEntry:
    duv: str
    algorithm: str
    n_orig: int
    n_opt: int
    t_orig: float
    t_opt: float
    c_orig: float
    c_opt: float

    def computed(self) -> dict[str, float | None]:
        """The three ratios at two decimals; None where the denominator is zero."""
        out: dict[str, float | None] = {}
        for name, fn, args in (
            ("opt_test_runs", opt_test_runs, (self.n_orig, self.n_opt)),
            ("opt_runtime", opt_runtime, (self.t_orig, self.t_opt)),
            ("coverage_regain", coverage_regain, (self.c_opt, self.c_orig)),
        ):
            try:
                out[name] = round2(fn(*args))
            except ZeroDivisionError:
                out[name] = None
        return out

    @property
    def regain(self) -> float:
        r = self.computed()["coverage_regain"]
        return 0.0 if r is None else r

    def to_dict(self) -> dict:
        return {**asdict(self), **self.computed()}

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsEntry":
        return cls(**{k: doc[k] for k in ("duv", "algorithm", *RAW)})


def _cell(v) -> str:
    return "" if v is None else f"{v:.2f}"


def format_report_csv(entries: Sequence[MetricsEntry]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["duv", "algorithm", *METRICS, *RAW])
    for e in entries:
        c = e.computed()
        w.writerow([e.duv, e.algorithm, *(_cell(c[m]) for m in METRICS), *(getattr(e, r) for r in RAW)])
    return buf.getvalue()


def format_report_table(entries: Sequence[MetricsEntry]) -> str:
    """One row per (metric, duv), one column per algorithm."""
    algs = list(dict.fromkeys(e.algorithm for e in entries))
    duvs = list(dict.fromkeys(e.duv for e in entries))
    by_key = {(e.duv, e.algorithm): e.computed() for e in entries}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "duv", *algs])
    for m in METRICS:
        for d in duvs:
            w.writerow([m, d, *(_cell(by_key[(d, a)][m]) if (d, a) in by_key else "" for a in algs)])
    return buf.getvalue()


def format_curve_csv(curve: Sequence[tuple[int, float]]) -> str:
    lines = ["tests,coverage_pct"] + [f"{n},{c:.4f}" for n, c in curve]
    return "\n".join(lines) + "\n"


def format_curve_svg(curve: Sequence[tuple[int, float]], title: str = "") -> str:
    """Cumulative coverage against tests completed, starting from (0, 0)."""
    width, height, pad = 480, 320, 40
    pts = [(0, 0.0), *curve]
    n_max = max(1, pts[-1][0])
    sx = (width - 2 * pad) / n_max
    sy = (height - 2 * pad) / 100.0

    def xy(n, c):
        return f"{pad + n * sx:.2f},{height - pad - c * sy:.2f}"

    poly = " ".join(xy(n, c) for n, c in pts)
    x0, y0, x1, y1 = pad, height - pad, width - pad, pad
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f"<title>{title}</title>\n"
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>\n'
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>\n'
        f'<text x="{width // 2}" y="{height - 8}" text-anchor="middle" font-size="12">tests completed ({n_max})</text>\n'
        f'<text x="12" y="{height // 2}" font-size="12" transform="rotate(-90 12 {height // 2})" '
        f'text-anchor="middle">coverage (%)</text>\n'
        f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{poly}"/>\n'
        "</svg>\n"
    )


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def emit_report(
    entries: Sequence[MetricsEntry],
    out_dir: str | Path,
    curves: dict[tuple[str, str], Sequence[tuple[int, float]]] | None = None,
) -> list[Path]:
    """Write report.json, report.csv, report_table.csv and one curve pair per (duv, algorithm)."""
    if not entries:
        raise ValueError("report needs at least one entry")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    doc = {"regain_target": REGAIN_TARGET, "entries": [e.to_dict() for e in entries]}
    for name, text in (
        ("report.json", json.dumps(doc, indent=2) + "\n"),
        ("report.csv", format_report_csv(entries)),
        ("report_table.csv", format_report_table(entries)),
    ):
        _write(out / name, text)
        written.append(out / name)
    for (duv, alg), curve in (curves or {}).items():
        stem = f"coverage_curve_{duv}_{alg}"
        _write(out / f"{stem}.csv", format_curve_csv(curve))
        _write(out / f"{stem}.svg", format_curve_svg(curve, f"{duv} / {alg}"))
        written += [out / f"{stem}.csv", out / f"{stem}.svg"]
    return written


def load_report(path: str | Path) -> list[MetricsEntry]:
    doc = json.loads(Path(path).read_text())
    return [MetricsEntry.from_dict(e) for e in doc["entries"]]
