"""Command-line entry point: ``tablecount <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bench import GridSpec, MarginGenerator, Scheme, generate_margins, run_and_write
from .errors import TableCountError
from .exact import count_exact, count_exact_01, ln_count
from .linear import ZERO_ONE_ESTIMATORS, orient
from .margins import format_margins, read_margins
from .maxent import DEFAULT_MAX_ITER, DEFAULT_TOL, solve_maxent
from .methods import ALL_METHODS, evaluate
from .sis import TrialDistribution, run_sis, sample_tables


def _print_log_count(method: str, result) -> None:
    line = f"{method}\tln={result.ln_omega!r}\tlog10={result.log10_omega!r}"
    if result.std_err is not None:
        line += f"\tstd_err={result.std_err!r}"
    print(line)


def _cmd_estimate(args) -> int:
    margins = read_margins(args.margins)
    if args.orient == "auto":
        margins = orient(margins)
    result = evaluate(
        args.method, margins, tol=args.tol, max_iter=args.max_iter, iters=args.iters, seed=args.seed
    )
    _print_log_count(args.method, result)
    if args.dump_z:
        solution = solve_maxent(margins, args.tol, args.max_iter)
        np.savetxt(args.dump_z, solution.Z, delimiter=",", fmt="%.17g")
    return 0


def _cmd_exact(args) -> int:
    margins = read_margins(args.margins)
    count = count_exact_01(margins) if args.zero_one else count_exact(margins)
    if count < 2**63:
        print(f"count={count}")
    print(f"ln={ln_count(count)!r}")
    return 0


def _cmd_sis(args) -> int:
    margins = read_margins(args.margins)
    trial = TrialDistribution(args.trial)
    progress = None
    if args.progress:

        def progress(done, total):
            print(f"{done}/{total}", file=sys.stderr)

    run = run_sis(margins, trial, args.iters, args.seed, progress=progress)
    print(
        f"sis-{trial.value}\tln={run.ln_estimate!r}\tstd_err={run.std_err!r}"
        f"\tess={run.ess!r}\titers={run.iterations}"
    )
    if args.emit_tables:
        with open(args.emit_tables, "w") as fh:
            for table in sample_tables(margins, trial, args.iters, args.seed):
                fh.write(" ".join(map(str, table.entries.ravel())) + "\n")
    return 0


def _cmd_bench(args) -> int:
    with open(args.grid) as fh:
        data = json.load(fh)
    if args.zero_one:
        data["zero_one"] = True
        data.setdefault("methods", list(ZERO_ONE_ESTIMATORS))
    spec = GridSpec.from_dict(data)
    records = run_and_write(spec, args.out, emit_plot_data=args.emit_plot_data)
    bad = sum(1 for r in records if r.status != "ok")
    print(f"{len(records)} records written to {args.out} ({bad} not ok)")
    return 0


def _cmd_gen_margins(args) -> int:
    gen = MarginGenerator(Scheme(args.scheme), args.m, args.n, args.N, args.seed, args.zero_one)
    sys.stdout.write(format_margins(generate_margins(gen)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tablecount", description="Count and sample contingency tables with fixed margins."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate ln of the table count")
    p.add_argument("--method", required=True, choices=ALL_METHODS)
    p.add_argument("--margins", required=True, help="file with 'r: ...' and 'c: ...' lines")
    p.add_argument("--orient", choices=["none", "auto"], default="none",
                   help="auto: put the longer margin vector on the rows")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--dump-z", metavar="PATH", help="write the max-entropy table as CSV")
    p.add_argument("--iters", type=int, default=10_000, help="SIS iterations")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("exact", help="exact count by dynamic programming")
    p.add_argument("--margins", required=True)
    p.add_argument("--zero-one", action="store_true", help="count 0-1 tables only")
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("sis", help="sequential importance sampling")
    p.add_argument("--margins", required=True)
    p.add_argument("--trial", choices=[t.value for t in TrialDistribution], default="ec")
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit-tables", metavar="PATH", help="one sampled table per line, row-major")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=_cmd_sis)

    p = sub.add_parser("bench", help="run an error grid")
    p.add_argument("--grid", required=True, help="grid config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--zero-one", action="store_true")
    p.add_argument("--emit-plot-data", action="store_true")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("gen-margins", help="draw a random margin pair")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="uniform")
    p.add_argument("-m", type=int, required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-N", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--zero-one", action="store_true")
    p.set_defaults(func=_cmd_gen_margins)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TableCountError, ValueError, OSError) as exc:
        print(f"tablecount: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
