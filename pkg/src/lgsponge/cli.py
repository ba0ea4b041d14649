"""Command-line entry point: ``sponge <command> ...``.

Exit codes: 0 ok, 2 validation or precondition failure, 3 budget exhausted,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__, lab
from .connectivity import component_count_split, component_labels, gap_sequence_1d
from .cover import (
    DEFAULT_EPS_RATIO,
    DEFAULT_NODE_BUDGET,
    BudgetExceeded,
    PreconditionError,
    box_count_bracket,
    delta_blocking,
)
from .measure import RootBracketError, mu_word, weights
from .model import (
    SpecError,
    SpongeSpec,
    format_rational,
    format_word,
    load_spec,
    parse_rational,
    parse_word,
    project,
    validate,
)
from .structure import VacuousBound, exponent_bounds, find_island

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_IO = 4


class _ValidationFailed(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (SpecError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _spec(args) -> SpongeSpec:
    spec = load_spec(args.spec)
    report = validate(spec)
    if not report.ok:
        _emit(report.to_json())
        raise _ValidationFailed()
    return spec


def _ladder(args) -> lab.Ladder:
    try:
        return lab.Ladder.geometric(args.delta_max, args.delta_min, args.q, args.eps_ratio)
    except ValueError as exc:
        raise PreconditionError(str(exc)) from None


# -- commands ----------------------------------------------------------------------


def cmd_validate(args) -> int:
    report = validate(load_spec(args.spec))
    _emit(report.to_json())
    return EXIT_OK if report.ok else EXIT_VALIDATION


def cmd_dims(args) -> int:
    _emit(weights(_spec(args)).to_json())
    return EXIT_OK


def cmd_blocking(args) -> int:
    spec = _spec(args)
    prof = weights(spec)
    blk = delta_blocking(spec, args.delta, args.budget)
    _emit(
        [
            {"word": format_word(w), "S": format_rational(s), "mu": mu_word(prof, w)}
            for w, s in zip(blk.words, blk.sides)
        ]
    )
    return EXIT_OK


def cmd_boxes(args) -> int:
    spec = _spec(args)
    word = spec.check_word(parse_word(args.cylinder))
    n_lo, n_hi = box_count_bracket(spec, word, args.delta, eps_ratio=args.eps_ratio, budget=args.budget)
    _emit({"n_lo": n_lo, "n_hi": n_hi})
    return EXIT_OK


def cmd_count(args) -> int:
    spec = _spec(args)
    word = spec.check_word(parse_word(args.cylinder))
    eps = args.delta / args.eps_ratio
    out = {"delta": format_rational(args.delta), "eps": format_rational(eps)}
    if args.split:
        sc = component_count_split(spec, word, args.delta, eps, budget=args.budget)
        out.update(count=sc.count, inner=sc.inner, boundary=sc.boundary_or_uncertain)
    else:
        _, _, labels = component_labels(spec, word, args.delta, eps, budget=args.budget)
        out.update(count=len(set(labels.tolist())), inner=None, boundary=None)
    _emit(out)
    return EXIT_OK


def cmd_gaps(args) -> int:
    seq = gap_sequence_1d(_spec(args), args.depth, args.budget)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["rank", "gap", "certified"])
    for i, g in enumerate(seq.gaps, start=1):
        writer.writerow([i, format_rational(g), "yes" if i <= seq.certified_prefix else "no"])
    return EXIT_OK


def cmd_islands(args) -> int:
    spec = _spec(args)
    if args.project is not None:
        if not 1 <= args.project <= spec.d:
            raise PreconditionError(f"--project must lie in [1, {spec.d}]")
        spec = project(spec, args.project)
    _emit(find_island(spec, args.max_depth, min(args.budget, 10**7)).to_json())
    return EXIT_OK


def cmd_bounds(args) -> int:
    _emit(exponent_bounds(_spec(args), args.j_fail, args.tau).to_json())
    return EXIT_OK


def cmd_fit(args) -> int:
    spec = _spec(args)
    word = spec.check_word(parse_word(args.cylinder))
    try:
        fit = lab.fit_exponent(spec, word, _ladder(args), args.threads, args.budget)
    except lab.LadderAborted as exc:
        _emit({"error": str(exc), "table": [{"delta": format_rational(d), "count": c} for d, c in exc.table]})
        raise
    _emit(fit.to_json())
    return EXIT_OK


def cmd_audit(args) -> int:
    spec = _spec(args)
    ladder = _ladder(args)
    if args.j_fail is not None:
        word = spec.check_word(parse_word(args.cylinder))
        res = lab.chi_audit(spec, args.j_fail, args.tau, word, ladder, args.threads, args.budget)
        for d in res.excluded:
            print(f"warning: rung {format_rational(d)} lies above the tau threshold, excluded", file=sys.stderr)
        _emit(res.to_json())
        return EXIT_OK
    if args.cylinders:
        cyls = [spec.check_word(parse_word(c)) for c in args.cylinders]
    else:
        cyls = lab.words_up_to(spec, args.max_cylinder_length)
    _emit(lab.ratio_audit(spec, cyls, ladder, args.bound, args.threads, args.budget).to_json())
    return EXIT_OK


def cmd_run(args) -> int:
    out = lab.run_experiment(args.config, args.out_dir, args.threads, args.budget_given)
    _emit({"out_dir": out["out_dir"], "rows": len(out["rows"])})
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads (default 1)")
    common.add_argument("--budget", type=int, default=argparse.SUPPRESS, help="node budget per cover")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="output directory for `run`")

    parser = argparse.ArgumentParser(prog="sponge", parents=[common], description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, spec=True):
        p = sub.add_parser(name, parents=[common], help=help_)
        if spec:
            p.add_argument("spec", help="sponge spec JSON file")
        p.set_defaults(func=fn)
        return p

    def delta_opts(p, eps=True):
        p.add_argument("--delta", type=_rational, required=True)
        if eps:
            p.add_argument("--eps-ratio", type=int, default=DEFAULT_EPS_RATIO)

    def ladder_opts(p):
        p.add_argument("--delta-max", type=_rational, default=Fraction(1, 8))
        p.add_argument("--delta-min", type=_rational, default=Fraction(1, 2048))
        p.add_argument("--q", type=_rational, default=Fraction(1, 2))
        p.add_argument("--eps-ratio", type=int, default=DEFAULT_EPS_RATIO)

    add("validate", cmd_validate, "check the sponge validity conditions")
    add("dims", cmd_dims, "betas, alphas and box dimension")
    delta_opts(add("blocking", cmd_blocking, "delta-blocking words"), eps=False)
    p = add("boxes", cmd_boxes, "bracket the delta-mesh box count")
    delta_opts(p)
    p.add_argument("--cylinder", default="")
    p = add("count", cmd_count, "bracketed delta-component count of a cylinder")
    delta_opts(p)
    p.add_argument("--cylinder", default="")
    p.add_argument("--split", action="store_true", help="split into inner and boundary components")
    p = add("gaps", cmd_gaps, "gap sequence of a 1-D attractor")
    p.add_argument("--depth", type=int, required=True)
    p = add("islands", cmd_islands, "search for an island certificate")
    p.add_argument("--max-depth", type=int, default=8)
    p.add_argument("--project", type=int, default=None, help="search the j-th projection instead")
    p = add("bounds", cmd_bounds, "exponent bound when a level has no inner trivial points")
    p.add_argument("--j-fail", type=int, required=True)
    p.add_argument("--tau", type=float, required=True)
    p = add("fit", cmd_fit, "fit the component-count exponent along a ladder")
    p.add_argument("--cylinder", default="")
    ladder_opts(p)
    p = add("audit", cmd_audit, "ratio audit, or chi audit with --j-fail/--tau")
    ladder_opts(p)
    p.add_argument("--cylinders", nargs="*", default=None)
    p.add_argument("--max-cylinder-length", type=int, default=0)
    p.add_argument("--bound", type=float, default=1e3)
    p.add_argument("--j-fail", type=int, default=None)
    p.add_argument("--tau", type=float, default=2.0)
    p.add_argument("--cylinder", default="", help="cylinder for the chi audit")
    p = add("run", cmd_run, "run an experiment config", spec=False)
    p.add_argument("config", help="experiment config JSON file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.budget_given = getattr(args, "budget", None)
    args.threads = getattr(args, "threads", 1)
    args.budget = args.budget_given or DEFAULT_NODE_BUDGET
    args.out_dir = getattr(args, "out_dir", "results")
    try:
        return args.func(args)
    except _ValidationFailed:
        return EXIT_VALIDATION
    except BudgetExceeded as exc:
        print(f"error: budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (SpecError, PreconditionError, VacuousBound, RootBracketError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
