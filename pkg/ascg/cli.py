"""Command-line interface.

Exit codes: 0 on success, 1 on a usage error, 2 when a solver or a checker
fails.
"""
import argparse
import csv
import json
import logging
import sys
from typing import List, Optional

from .certificates import constants_table
from .errors import ASCGError, InvalidConfig, UsageError
from .harness import (
    compare,
    compare_table,
    default_runs,
    format_table,
    generate_l1ls,
    load_problem,
    random_quadratic_problem,
    save_problem,
    trace_summary,
)
from .oracle import counterexample
from .solver import Reduction, SolverConfig, Stepsize, ascg_run, cg_run


logger = logging.getLogger(__name__)

LOG_FORMAT = "%(levelname)s :: %(asctime)s :: %(message)s"


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _solver_options(parser):
    parser.add_argument("--problem", required=True, help="problem JSON file")
    parser.add_argument(
        "--stepsize", choices=[s.value for s in Stepsize], default="adaptive"
    )
    parser.add_argument(
        "--reduction", choices=[r.value for r in Reduction], default="caratheodory"
    )
    parser.add_argument("--max-iters", type=int, default=1000)
    parser.add_argument("--gap-tol", type=float, default=1e-6)
    parser.add_argument("--start-vertex", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="ascg", description="Away-steps conditional gradient over polytopes."
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run ASCG or CG on a problem file")
    _solver_options(solve)
    solve.add_argument("--algorithm", choices=["ascg", "cg"], default="ascg")
    solve.add_argument(
        "--out", "--trace", dest="trace", help="write the iteration trace as CSV here"
    )
    solve.add_argument("--summary", help="also write the run summary as JSON here")
    solve.add_argument("--debug", action="store_true", help="check invariants")

    cmp_ = sub.add_parser("compare", help="compare stepsize and reduction choices")
    _solver_options(cmp_)
    cmp_.add_argument("--jobs", type=int, default=1)
    cmp_.add_argument("--csv", help="write the comparison rows as CSV here")

    const = sub.add_parser("constants", help="print the certificate constants")
    const.add_argument("--problem", required=True)
    const.add_argument(
        "--reduction", choices=[r.value for r in Reduction], default="caratheodory"
    )
    const.add_argument("--hoffman", choices=["squared", "classical"], default="squared")
    const.add_argument("--eps", type=float, default=1e-6)

    sub.add_parser("demo-oracle", help="show where the naive mapped oracle fails")

    gen = sub.add_parser("generate", help="write a random problem file")
    gen.add_argument("--family", choices=["l1ls", "quadratic"], default="l1ls")
    gen.add_argument("--k", type=int, default=10)
    gen.add_argument("--n", type=int, default=20)
    gen.add_argument("--lam", type=float, default=0.1)
    gen.add_argument("--kind", choices=["simplex", "box", "l1_ball"], default="box")
    gen.add_argument("--out", help="output path; stdout when omitted")

    return parser


def _load(path):
    try:
        return load_problem(path)
    except (OSError, ValueError, KeyError) as e:
        raise UsageError(f"cannot read problem {path}: {e}")


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(
            stepsize=args.stepsize,
            reduction=args.reduction,
            max_iters=args.max_iters,
            gap_tolerance=args.gap_tol,
            start_vertex_id=args.start_vertex,
            seed=args.seed,
            debug=getattr(args, "debug", False),
        )
    except InvalidConfig as e:
        raise UsageError(str(e))


def cmd_solve(args, out) -> int:
    problem = _load(args.problem)
    solve = ascg_run if args.algorithm == "ascg" else cg_run
    trace = solve(problem.objective, problem.polytope, _config(args))
    if args.trace:
        trace.write_csv(args.trace)
    summary = trace_summary(trace)
    if args.summary:
        with open(args.summary, "w") as f:
            json.dump(summary, f, indent=2)
    json.dump(summary, out, indent=2)
    out.write("\n")
    return 0


def cmd_compare(args, out) -> int:
    problem = _load(args.problem)
    rows = compare(problem, default_runs(_config(args)), jobs=args.jobs)
    out.write(compare_table(rows) + "\n")
    if args.csv:
        with open(args.csv, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0].as_dict()))
            writer.writeheader()
            writer.writerows(r.as_dict() for r in rows)
    return 2 if all(r.error for r in rows) else 0


def cmd_constants(args, out) -> int:
    problem = _load(args.problem)
    table = constants_table(
        problem.objective, problem.polytope, args.reduction, args.hoffman, args.eps
    )
    rows = [{"constant": k, "value": v} for k, v in table.items()]
    out.write(format_table(rows) + "\n")
    return 0


def cmd_demo_oracle(args, out) -> int:
    ce = counterexample()
    lines = [
        "X = [-1, 1]^3 mapped by E = " + json.dumps(ce.E.tolist()),
        f"c = {ce.c.tolist()}, E'c = {ce.direction.tolist()}",
        "",
        "vertex  coordinates      image",
    ]
    for label, vertex_id in ce.vertex_ids.items():
        coords = ce.polytope.vertex(vertex_id).astype(int).tolist()
        image = [int(t) for t in ce.images[label]]
        lines.append(f"{label:<7} {str(coords):<16} {image}")
    lines += [
        "",
        "ext(EX) = {" + ", ".join(f"{label}'" for label in ce.extreme_labels) + "}",
        "minimizers of <E'c, x> over X: " + ", ".join(ce.minimizer_labels),
        f"if the oracle over X returns {ce.offending_label}, the naive answer is "
        f"{ce.offending_label}' = {[int(t) for t in ce.offending_image]}",
        f"{ce.offending_label}' is not a vertex of EX: it is the midpoint of "
        f"{ce.edge_labels[0]}' and {ce.edge_labels[1]}'",
    ]
    out.write("\n".join(lines) + "\n")
    return 0


def cmd_generate(args, out) -> int:
    if args.family == "l1ls":
        problem = generate_l1ls(args.k, args.n, args.lam, args.seed)
    else:
        problem = random_quadratic_problem(args.kind, args.n, args.seed)
    if args.out:
        save_problem(problem, args.out)
    else:
        json.dump(problem.to_dict(), out)
        out.write("\n")
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "compare": cmd_compare,
    "constants": cmd_constants,
    "demo-oracle": cmd_demo_oracle,
    "generate": cmd_generate,
}


def main(argv: Optional[List[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"ascg: error: {e}\n")
        return 1

    logging.basicConfig(format=LOG_FORMAT, level=getattr(logging, args.log_level))

    try:
        return COMMANDS[args.command](args, out)
    except UsageError as e:
        sys.stderr.write(f"ascg: error: {e}\n")
        return 1
    except ASCGError as e:
        logger.error("%s: %s", type(e).__name__, e)
        sys.stderr.write(f"ascg: {type(e).__name__}: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
