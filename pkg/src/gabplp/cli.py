"""``gabplp`` command line: solve, bound, check.

Exit codes: 0 success, 1 infeasible or unbounded, 2 bad input, 3 numerical
failure (including a failed cross-check).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .barrier import (BarrierConfig, affine_scaling_solve, barrier_solve, bound_split_columns, extend_point,
                      find_interior_point, newton_direction)
from .convergence import analyze
from .errors import GabpNotConvergedError, GabplpError, InputError, NumericalError, ProblemError
from .instances import random_feasible_lp
from .io import build_toy_problem, parse_lp, write_trace
from .model import LpProblem, SparseSymMatrix, lift_point, recover_original, to_standard_form
from .oracle import MAX_BASES, vertex_enumerate
from .primaldual import PrimalDualConfig, pd_solve

METHODS = ("barrier", "primal-dual", "affine")
LINSOLVE = ("gabp-normal", "gabp-augmented", "dense")
_BARRIER_MODE = {"gabp-normal": "gabp-normal", "gabp-augmented": "gabp-augmented", "dense": "dense-oracle"}
_PD_MODE = {"gabp-normal": "explicit-gabp", "gabp-augmented": "full-gabp", "dense": "dense-oracle"}
TOY_START = (0.25, 0.25)
CHECK_TOL = 1e-5


def _fmt(v: float) -> str:
    return f"{v:.17g}"


@dataclass
class Solution:
    problem: LpProblem
    x: np.ndarray
    objective: float
    trace: list
    fallback_steps: int


def solve_problem(problem: LpProblem, method: str = "barrier", linsolve: str = "gabp-normal",
                  tol: float = 1e-8, start=None) -> Solution:
    """Standardize and solve; ``start`` is an original-space interior point."""
    std = to_standard_form(problem)
    if method == "primal-dual":
        res = pd_solve(std, cfg=PrimalDualConfig(linsolve=_PD_MODE[linsolve], eps_outer=tol))
    else:
        cfg = BarrierConfig(linsolve=_BARRIER_MODE[linsolve], eps_outer=tol)
        x0 = None if start is None else lift_point(problem, std, start, shift=1.0)
        if method == "barrier":
            res = barrier_solve(std, x0, cfg)
        elif method == "affine":
            if x0 is None:
                full = bound_split_columns(std)
                x0 = find_interior_point(full, BarrierConfig(linsolve="dense-oracle"))[0][:std.n]
            res = affine_scaling_solve(std, x0, cfg)
        else:
            raise InputError(f"unknown method {method!r}")
    return Solution(problem, res.x, std.original_objective(res.x), res.trace, res.fallback_steps)


def _load_problem(args) -> LpProblem:
    if args.toy:
        return build_toy_problem()
    if args.file is None:
        raise InputError("no LP file given (or use --toy)")
    try:
        data = Path(args.file).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {args.file}: {exc.strerror}") from None
    return parse_lp(data)


def cmd_solve(args, out) -> int:
    problem = _load_problem(args)
    start = TOY_START if args.toy and args.method == "affine" else None
    sol = solve_problem(problem, args.method, args.linsolve, args.tol, start)
    x = recover_original(sol.x, to_standard_form(problem).provenance)
    print(f"objective {_fmt(sol.objective)}", file=out)
    for name, v in zip(problem.names, x):
        print(f"{name} {_fmt(v)}", file=out)
    print(f"steps {len(sol.trace)}", file=out)
    print(f"gabp_fallback_steps {sol.fallback_steps}", file=out)
    if args.trace:
        try:
            Path(args.trace).write_text(write_trace(sol.trace))
        except OSError as exc:
            raise InputError(f"cannot write trace {args.trace}: {exc.strerror}") from None
    return 0


def _read_matrix(path: str) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    rows = [line for line in text.splitlines() if line.strip()]
    try:
        M = np.array([[float(v) for v in line.split(",")] for line in rows])
    except ValueError as exc:
        raise InputError(f"bad matrix entry in {path}: {exc}") from None
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.size == 0:
        raise InputError(f"matrix in {path} is not square")
    if not np.all(np.isfinite(M)):
        raise InputError(f"matrix in {path} has non-finite entries")
    if np.max(np.abs(M - M.T)) > 1e-12:
        raise InputError(f"matrix in {path} is not symmetric within 1e-12")
    return M


def cmd_bound(args, out) -> int:
    M = _read_matrix(args.matrix)
    report = analyze(SparseSymMatrix.from_dense(M, sym_tol=1e-12), args.eps)
    for line in report.lines():
        print(line, file=out)
    return 0


def _direction_gap(problem: LpProblem, trace) -> tuple[int, float]:
    """Recompute barrier directions at traced points under both solvers."""
    std = to_standard_form(problem)
    full = bound_split_columns(std)
    compared, worst = 0, 0.0
    for rec in trace:
        if not rec.gabp_converged or rec.mu <= 0:
            continue
        x = extend_point(std, full, np.array(rec.x))
        try:
            g = newton_direction(full, x, rec.mu, "gabp-normal", check_feasible=False)
        except GabpNotConvergedError:
            continue
        d = newton_direction(full, x, rec.mu, "dense-oracle", check_feasible=False)
        scale = max(float(np.linalg.norm(d.dx)), 1e-12)
        worst = max(worst, float(np.linalg.norm(g.dx - d.dx)) / scale)
        compared += 1
    return compared, worst


def check_instances(instances, out, solve=solve_problem) -> int:
    """Cross-check GaBP-backed against dense solves and vertex enumeration."""
    worst_obj, worst_dir, failures = 0.0, 0.0, 0
    for label, problem in instances:
        std = to_standard_form(problem)
        line = f"instance {label}: n={std.n} p={std.p}"
        ref = None
        try:
            ref = vertex_enumerate(problem).objective
            line += f" vertex={_fmt(ref)}"
        except InputError:
            line += f" vertex=skipped(>{MAX_BASES} bases)"
        print(line, file=out)
        for method in ("barrier", "primal-dual"):
            try:
                g = solve(problem, method, "gabp-normal")
                d = solve(problem, method, "dense")
            except GabplpError as exc:
                print(f"  {method}: failed in {exc.stage}: {exc}", file=out)
                failures += 1
                continue
            values = [g.objective, d.objective] + ([ref] if ref is not None else [])
            gap = max(values) - min(values)
            worst_obj = max(worst_obj, gap)
            msg = f"  {method}: gabp={_fmt(g.objective)} dense={_fmt(d.objective)} objective_diff={gap:.3e}"
            if method == "barrier":
                compared, wd = _direction_gap(problem, g.trace)
                worst_dir = max(worst_dir, wd)
                msg += f" directions={compared} direction_diff={wd:.3e}"
            print(msg, file=out)
    print(f"max objective discrepancy: {worst_obj:.3e}", file=out)
    print(f"max direction discrepancy: {worst_dir:.3e}", file=out)
    ok = failures == 0 and worst_obj <= CHECK_TOL and worst_dir <= CHECK_TOL
    print(f"result: {'ok' if ok else 'DISCREPANCY'}", file=out)
    return 0 if ok else 3


def cmd_check(args, out, solve=solve_problem) -> int:
    if args.random is not None:
        n, p, count = args.random
        rng = np.random.default_rng(args.seed)
        try:
            instances = [(f"random-{k}", random_feasible_lp(rng, n=n, p=p)) for k in range(count)]
        except ValueError as exc:
            raise InputError(str(exc)) from None
    else:
        instances = [("file" if not args.toy else "toy", _load_problem(args))]
    return check_instances(instances, out, solve)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gabplp", description="LP interior-point solver with GaBP Newton steps")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an LP file")
    p.add_argument("file", nargs="?")
    p.add_argument("--method", choices=METHODS, default="barrier")
    p.add_argument("--linsolve", choices=LINSOLVE, default="gabp-normal")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--trace")
    p.add_argument("--toy", action="store_true", help="use the built-in 2-variable, 11-constraint problem")

    p = sub.add_parser("bound", help="convergence report for a symmetric matrix (CSV)")
    p.add_argument("matrix")
    p.add_argument("--eps", type=float, default=1e-6)

    p = sub.add_parser("check", help="cross-check GaBP-backed solves against dense oracles")
    p.add_argument("file", nargs="?")
    p.add_argument("--toy", action="store_true")
    p.add_argument("--random", nargs=3, type=int, metavar=("N", "P", "COUNT"))
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None, out=None, err=None, check_solver=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "solve":
            if not args.tol > 0:
                raise InputError("--tol must be positive")
            return cmd_solve(args, out)
        if args.command == "bound":
            if not 0 < args.eps < 1:
                raise InputError("--eps must lie in (0, 1)")
            return cmd_bound(args, out)
        return cmd_check(args, out, check_solver or solve_problem)
    except ProblemError as exc:
        print(f"gabplp: {exc.stage}: {exc}", file=err)
        return 1
    except InputError as exc:
        print(f"gabplp: {exc.stage}: {exc}", file=err)
        return 2
    except NumericalError as exc:
        print(f"gabplp: {exc.stage}: {exc}", file=err)
        return 3


if __name__ == "__main__":
    sys.exit(main())
