"""Command-line interface: ``bvmixed solve | study | check``."""

import argparse
import json
import logging
import sys

import numpy as np

from . import checks
from .analytic_examples import EXAMPLES, get_example
from .study import run_study, solve_level
from .support_solver import OuterConfig

DEFAULT_LEVELS = {"example1": (2, 11), "example2": (2, 8)}


def _power_of_two(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if n < 2 or n & (n - 1):
        raise argparse.ArgumentTypeError(f"N must be a power of two >= 2, got {n}")
    return n


def _levels(text):
    try:
        lo, hi = (int(s) for s in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"levels must look like A:B, got {text!r}") from None
    if not 1 <= lo <= hi <= 12:
        raise argparse.ArgumentTypeError("levels need 1 <= A <= B <= 12")
    return lo, hi


def _positive(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bvmixed",
        description="BV-regularized optimal control with a 1D mixed finite element state.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write to this file instead of stdout")
    common.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
    problem = argparse.ArgumentParser(add_help=False)
    problem.add_argument("--example", choices=sorted(EXAMPLES), default="example1")
    problem.add_argument("--alpha", type=_positive, help="override the regularization weight")
    problem.add_argument("--epsilon", type=_positive, default=1e-10,
                         help="support drift tolerance of the outer loop")

    sub = parser.add_subparsers(dest="command", required=True)
    p_solve = sub.add_parser("solve", parents=[problem, common],
                             help="solve one example on a uniform mesh")
    p_solve.add_argument("--n", type=_power_of_two, default=256, help="number of cells")

    p_study = sub.add_parser("study", parents=[problem, common],
                             help="convergence study over dyadic levels")
    p_study.add_argument("--levels", type=_levels,
                         help="exponents A:B of N = 2**k (default 2:11 or 2:8)")
    p_study.add_argument("--format", choices=("csv", "json"), default="csv")
    p_study.add_argument("--jobs", type=int, default=1, help="worker processes")

    p_check = sub.add_parser("check", parents=[common], help="run the self-check suites")
    p_check.add_argument("--seed", type=int, default=0)
    return parser


def _write(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solution_dict(args, spec, result):
    sol = result.solution
    return {
        "example": spec.name,
        "N": args.n,
        "alpha": spec.alpha,
        "termination": result.termination.value,
        "outer_iterations": result.outer_iterations,
        "assumption_ok": result.assumption_ok,
        "objective": sol.objective,
        "kkt_residual": sol.kkt_residual,
        "control": sol.jump_control().to_dict(),
        "nodes": sol.mesh.nodes.tolist(),
        "y": sol.y.values.tolist(),
        "p": sol.p.values.tolist(),
        "phi": sol.phi.values.tolist(),
        "trace": [
            {"k": it.k, "m": it.m, "support": np.asarray(it.support).tolist(),
             "objective": it.objective}
            for it in result.history
        ],
    }


def _cmd_solve(args):
    spec = get_example(args.example, args.alpha)
    config = OuterConfig(epsilon=args.epsilon, verbose=args.verbose)
    result = solve_level(spec, args.n, config)
    _write(json.dumps(_solution_dict(args, spec, result), indent=2) + "\n", args.output)
    if not result.converged:
        print(f"error: solve did not converge ({result.termination.value})", file=sys.stderr)
        return 1
    return 0


def _cmd_study(args):
    lo, hi = args.levels or DEFAULT_LEVELS[args.example]
    if args.example == "example2" and hi >= 10:
        print("error: example2 levels must stay below the reference level 10", file=sys.stderr)
        return 2
    config = OuterConfig(epsilon=args.epsilon, verbose=args.verbose)
    report = run_study(args.example, range(lo, hi + 1), config, jobs=max(args.jobs, 1),
                       alpha=args.alpha)
    text = report.to_csv() if args.format == "csv" else report.to_json() + "\n"
    _write(text, args.output)
    if not report.converged:
        print("error: at least one level did not converge", file=sys.stderr)
        return 1
    return 0


def _cmd_check(args):
    results = checks.run_all(args.seed)
    _write("".join(r.line() + "\n" for r in results), args.output)
    return 0 if all(r.passed for r in results) else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                            format="%(name)s %(levelname)s %(message)s")
    handler = {"solve": _cmd_solve, "study": _cmd_study, "check": _cmd_check}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
