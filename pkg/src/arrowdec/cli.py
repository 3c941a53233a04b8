"""Command-line front end: generate, decompose, solve, verify, benchmark.

Exit codes: 0 on success, 1 on verification failure, 2 on usage or domain
errors.  All flags are long-form.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import checks
from .bench import CSV_HEADER, plot_complexity, run_bench, write_bench_csv
from .decompose import DecompositionError, arrow_decompose, load_arrow_system, verify_split
from .fem import FemConfig, FemError, build_model, dump_model, load_config, partition
from .partition import AssumptionError
from .sdp import (
    SdpError,
    build_arrow,
    build_chordal,
    build_fictitious,
    build_original,
    count_report,
    export_sdpa,
    import_sdpa,
    write_count_csv,
)
from .solver import SolveOptions, SolveReport, solve

USAGE_ERROR = 2
CHECK_FAILURE = 1


def _mesh_pair(text):
    try:
        nx, ny = text.lower().split("x")
        return int(nx), int(ny)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NXxNY, got {text!r}") from None


def _model_from_args(args):
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    else:
        if args.nx is None or args.ny is None:
            raise FemError("provide --nx and --ny (or --config)")
        cfg = FemConfig(nx=args.nx, ny=args.ny)
    return build_model(cfg)


def _problem_from_args(args, model):
    form = args.form
    if form == "original":
        return build_original(model)
    if args.subx is None or args.suby is None:
        raise FemError(f"form {form!r} needs --subx and --suby")
    plan = partition(model, args.subx, args.suby)
    if form == "arrow":
        return build_arrow(model, plan, cross_policy=args.cross_policy or "one")
    if form == "chordal":
        return build_chordal(model, plan, cross_policy=args.cross_policy or "none")
    if form == "fictitious":
        return build_fictitious(model, plan)
    raise FemError(f"unknown form {form!r}")


def cmd_gen(args):
    model = _model_from_args(args)
    prob = _problem_from_args(args, model)
    rep = count_report(prob)
    print(f"{rep.n_vars} vars, block {rep.max_block}")
    if args.out:
        export_sdpa(prob, args.out + ".dat-s")
        write_count_csv(
            [(prob.meta["form"], prob.meta.get("p", 1), rep)], args.out + ".counts.csv"
        )
        print(f"wrote {args.out}.dat-s and {args.out}.counts.csv")
    if args.dump_model:
        dump_model(model, args.dump_model)
        print(f"wrote element matrices and dof map to {args.dump_model}/")
    return 0


def cmd_decompose(args):
    system = load_arrow_system(args.input)
    split = arrow_decompose(system, tol=args.tol)
    report = verify_split(system.assemble(), split.blocks, tol=args.tol)
    print(f"parts: {system.p}, couplers: {len(split.D)}")
    print(report)
    if args.out:
        lines = [
            f"max_residual {report.max_residual:.17g}",
            f"min_eigenvalue {report.min_eigenvalue:.17g}",
            f"passed {int(report.passed)}",
        ]
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0 if report.passed else CHECK_FAILURE


def cmd_solve(args):
    if args.input:
        prob = import_sdpa(args.input)
        label = args.input
    else:
        model = _model_from_args(args)
        prob = _problem_from_args(args, model)
        label = f"{prob.meta['form']} {model.cfg.nx}x{model.cfg.ny}"
    opts = SolveOptions(
        rel_gap_tol=args.gap_tol,
        feas_tol=args.feas_tol,
        max_iters=args.max_iters,
        verbose=args.verbose,
        time_limit=args.time_limit,
    )
    rep = solve(prob, opts)
    print(f"problem: {label}")
    for line in rep.log_lines():
        print(line)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(SolveReport.csv_header + "\n" + rep.csv_row() + "\n")
    return 0 if rep.status in ("optimal", "near_optimal") else CHECK_FAILURE


def cmd_verify(args):
    failures = checks.run_all(seed=args.seed, trials=args.trials)
    if args.inject_corruption:
        # deliberately corrupt a decomposition: the audit must then FAIL,
        # and this command reports that injected failure with exit code 1
        detected, rep = checks.corrupted_split_fails(seed=args.seed)
        print(f"injected corruption: residual {rep.max_residual:.3e} flagged={detected}")
        failures.append("injected corruption (expected failure)")
    if failures:
        for msg in failures:
            print(f"FAIL {msg}", file=sys.stderr)
        print(f"{len(failures)} failure(s)", file=sys.stderr)
        return CHECK_FAILURE
    print("all verification suites passed")
    return 0


def cmd_bench(args):
    forms = [f.strip() for f in args.forms.split(",") if f.strip()]
    opts = SolveOptions(max_iters=args.max_iters)
    rows, fits = run_bench(
        args.meshes,
        forms=forms,
        sub_elems=args.sub_elems,
        opts=opts,
        budget_s=args.budget,
    )
    for fit in fits:
        print(fit)
    if args.csv_out:
        write_bench_csv(rows, args.csv_out)
        print(f"wrote {args.csv_out}")
        if not args.no_plot:
            fig_path = args.csv_out.rsplit(".", 1)[0] + ".png"
            plot_complexity(rows, fits, fig_path)
            print(f"wrote {fig_path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="arrowdec",
        description="topology-optimization SDPs: generation, decomposition, "
                    "solving and benchmarking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a problem and write SDPA files")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--config", help="key=value mesh config file")
    p.add_argument("--form", default="original",
                   choices=["original", "chordal", "arrow", "fictitious"])
    p.add_argument("--subx", type=int)
    p.add_argument("--suby", type=int)
    p.add_argument("--cross-policy", choices=["none", "one", "both"])
    p.add_argument("--out", help="output path prefix")
    p.add_argument("--dump-model", help="directory for element matrices + dof map")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("decompose", help="decompose a serialized arrow system")
    p.add_argument("--input", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", help="write the audit report to this file")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("solve", help="solve a problem (generated or SDPA file)")
    p.add_argument("--input", help="SDPA sparse file")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--config")
    p.add_argument("--form", default="original",
                   choices=["original", "chordal", "arrow", "fictitious"])
    p.add_argument("--subx", type=int)
    p.add_argument("--suby", type=int)
    p.add_argument("--cross-policy", choices=["none", "one", "both"])
    p.add_argument("--gap-tol", type=float, default=1e-9)
    p.add_argument("--feas-tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--csv", help="write the solve report as CSV")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run the randomized verification suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int)
    p.add_argument("--inject-corruption", action="store_true",
                   help="corrupt a split on purpose; the run must fail")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="benchmark forms over a mesh sweep")
    p.add_argument("--meshes", type=lambda s: [_mesh_pair(t) for t in s.split(",")],
                   default=[(8, 4), (12, 6), (16, 8), (20, 10), (24, 12)])
    p.add_argument("--forms", default="original,arrow")
    p.add_argument("--sub-elems", type=_mesh_pair, default=(2, 2),
                   help="subdomain size in elements for decomposed forms")
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--budget", type=float, help="per-row time budget in seconds")
    p.add_argument("--csv-out")
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FemError, SdpError, DecompositionError, AssumptionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
