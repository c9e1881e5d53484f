#!/usr/bin/env python3
"""Run every DUV against every regressor and print the raw and ratio tables.

    python scripts/reproduce_tables.py [--out DIR] [--seed N] [--algos linear,dt]
"""

import argparse
import sys
import tempfile
from pathlib import Path

from coverloop.metrics import METRICS, load_report
from coverloop.ml import ALGORITHMS, parse_algorithms
from coverloop.pipeline import RunConfig, closed_loop

DUVS = ("alu", "adc", "ecc")


def _fmt(v) -> str:
    if v is None:
        return "-"
    return f"{v:.2f}" if isinstance(v, float) else str(v)


def _print_table(title: str, header: list[str], rows: list[list]) -> None:
    cells = [header, *[[_fmt(c) for c in r] for r in rows]]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    print(f"\n{title}")
    for i, r in enumerate(cells):
        print("  ".join(c.rjust(w) if j > 1 else c.ljust(w) for j, (c, w) in enumerate(zip(r, widths))))
        if i == 0:
            print("  ".join("-" * w for w in widths))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, help="keep artifacts here (default: a temporary directory)")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--algos", default=",".join(ALGORITHMS))
    args = ap.parse_args(argv)
    algos = parse_algorithms(args.algos)

    with tempfile.TemporaryDirectory() as tmp:
        root = args.out or Path(tmp)
        entries = {}
        for duv in DUVS:
            out = root / duv
            closed_loop(RunConfig(duv=duv, seed=args.seed, algos=algos, max_iters=1), out)
            entries[duv] = {e.algorithm: e for e in load_report(out / "iter_01" / "report.json")}

    raw_rows = []
    for label, orig_attr, opt_attr in (
        ("test runs", "n_orig", "n_opt"),
        ("run-time (s)", "t_orig", "t_opt"),
        ("coverage (%)", "c_orig", "c_opt"),
    ):
        for duv in DUVS:
            first = entries[duv][algos[0]]
            raw_rows.append([label, duv, getattr(first, orig_attr), *(getattr(entries[duv][a], opt_attr) for a in algos)])
    _print_table("raw regression results", ["quantity", "duv", "original", *algos], raw_rows)

    ratio_rows = [
        [m, duv, *(entries[duv][a].computed()[m] for a in algos)] for m in METRICS for duv in DUVS
    ]
    _print_table("optimization metrics", ["metric", "duv", *algos], ratio_rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
