"""Command-line entry point: ``coverloop <stage> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from coverloop.errors import ConfigError, DataError, ParseError
from coverloop.ml import ALGORITHMS, parse_algorithms
from coverloop.pipeline import (
    DEFAULT_OUT,
    EXIT_CONFIG,
    EXIT_OK,
    RunConfig,
    closed_loop,
    stage_prepare,
    stage_report,
    stage_run,
    stage_simulate,
    stage_synthesize,
    stage_train,
)
from coverloop.testbench import BENCHES, get_bench

log = logging.getLogger("coverloop")


def _out(args) -> Path:
    return Path(args.out or os.environ.get("COVERLOOP_OUT") or DEFAULT_OUT)


def _config_from(args) -> RunConfig:
    return RunConfig(
        duv=args.duv,
        covergroup=args.covergroup,
        constraints=args.constraints,
        tests=args.tests,
        txns=args.txns,
        seed=args.seed,
        algos=parse_algorithms(args.algos),
        max_iters=args.max_iters,
        only_missed=args.only_missed,
        margin=args.margin,
        per_bin=args.per_bin,
        miss_tol=args.miss_tol,
    )


def _algos(args) -> list[str] | None:
    return parse_algorithms(args.algos) if args.algos else None


def cmd_init(args) -> int:
    bench = get_bench(args.duv)
    out = _out(args)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{bench.name}_covergroup.json").write_text(bench.covergroup.dumps(), newline="\n")
    (out / f"{bench.name}_constraints.json").write_text("{}\n", newline="\n")
    print(f"wrote {bench.name}_covergroup.json and {bench.name}_constraints.json to {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    s = stage_run(_config_from(args), _out(args))
    print(f"original regression: {s['n_test_runs']} tests, coverage {s['coverage_pct']:.2f}%, "
          f"{s['scoreboard_errors']} scoreboard errors, {s['wall_time']:.3f}s")
    return EXIT_OK


def cmd_prepare(args) -> int:
    rep = stage_prepare(_out(args))
    n_ex = sum(1 for b in rep["bins"].values() if "excluded" in b)
    print(f"prepared {rep['rows_deduped']} of {rep['rows_raw']} rows; {n_ex} bins not learnable")
    return EXIT_OK


def cmd_train(args) -> int:
    for alg, n in stage_train(_out(args), _algos(args)).items():
        print(f"{alg}: {n} models")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    for alg, n in stage_synthesize(_out(args), _algos(args), args.margin).items():
        print(f"{alg}: {n} directed tests")
    return EXIT_OK


def cmd_simulate(args) -> int:
    for alg, c in stage_simulate(_out(args), _algos(args)).items():
        print(f"{alg}: optimized coverage {c:.2f}%")
    return EXIT_OK


def _print_entries(entries) -> None:
    print(f"{'algorithm':<10} {'tests(x)':>9} {'runtime(x)':>11} {'regain(%)':>10}")
    for e in entries:
        c = e.computed()
        cells = [("-" if c[k] is None else f"{c[k]:.2f}") for k in ("opt_test_runs", "opt_runtime", "coverage_regain")]
        print(f"{e.algorithm:<10} {cells[0]:>9} {cells[1]:>11} {cells[2]:>10}")


def cmd_report(args) -> int:
    _print_entries(stage_report(_out(args), _algos(args)))
    return EXIT_OK


def cmd_loop(args) -> int:
    out = _out(args)
    result = closed_loop(_config_from(args), out)
    last = result.best[-1]
    state = "converged" if result.converged else "loop cap reached"
    print(f"{state} after {result.iterations} iteration(s); best {last['algorithm']} "
          f"regain {last['coverage_regain']}%")
    print(json.dumps({"out": str(out), "exit": result.exit_code}))
    return result.exit_code


def _add_out(p) -> None:
    p.add_argument("--out", help="artifact directory (default: $COVERLOOP_OUT or ./coverloop_out)")


def _add_algos(p, default=None) -> None:
    p.add_argument("--algos", "--algo", default=default,
                   help=f"comma-separated subset of {','.join(ALGORITHMS)}")


def _add_config(p) -> None:
    p.add_argument("--duv", choices=sorted(BENCHES), default="alu")
    p.add_argument("--covergroup", help="covergroup JSON replacing the built-in one")
    p.add_argument("--constraints", help="base constraint JSON for the original regression")
    p.add_argument("--tests", type=int, help="original regression test count")
    p.add_argument("--txns", type=int, help="transactions per test")
    p.add_argument("--seed", type=int, default=1, help="master seed")
    _add_algos(p, ",".join(ALGORITHMS))
    p.add_argument("--max-iters", type=int, default=5, help="closed-loop iteration cap")
    p.add_argument("--only-missed", action="store_true", help="target only bins the original regression missed")
    p.add_argument("--margin", type=float, default=0.02, help="range margin as a fraction of domain width")
    p.add_argument("--per-bin", action="store_true", help="one directed test per bin instead of a pooled plan")
    p.add_argument("--miss-tol", type=float, default=1e-3,
                   help="pooled plan: expected number of never-drawn bins to tolerate")
    _add_out(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coverloop", description="ML-guided coverage closure")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="write the built-in covergroup and an empty constraint file")
    p.add_argument("--duv", choices=sorted(BENCHES), default="alu")
    _add_out(p)
    p.set_defaults(func=cmd_init)

    for name, func, help_ in (
        ("run", cmd_run, "original random regression"),
        ("loop", cmd_loop, "full closed loop until regain reaches 99%%"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_config(p)
        p.set_defaults(func=func)

    for name, func, help_ in (
        ("prepare", cmd_prepare, "dedupe and pick dependent fields"),
        ("train", cmd_train, "fit one model per bin"),
        ("synthesize", cmd_synthesize, "emit directives and optimized plans"),
        ("simulate", cmd_simulate, "run optimized plans"),
        ("report", cmd_report, "compute metrics and write report files"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_out(p)
        if name != "prepare":
            _add_algos(p)
        if name == "synthesize":
            p.add_argument("--margin", type=float, default=None)
        p.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ParseError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
