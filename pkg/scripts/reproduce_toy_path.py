"""Affine-scaling path on the 2-variable, 11-constraint toy LP as CSV.

    python scripts/reproduce_toy_path.py [--out path.csv] [--linsolve gabp-normal|gabp-augmented|dense]

One row per iterate: step index, x1, x2, objective x1 + x2, step length
and whether GaBP converged for that direction.  The constraint lines
2p x1 + x2 = p^2 + 1 can be drawn from the same file's header comment.
"""

import argparse
import csv
import sys

from gabplp.cli import TOY_START, solve_problem
from gabplp.io import build_toy_problem


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--out", help="CSV file (default: standard output)")
    parser.add_argument("--linsolve", default="gabp-normal", choices=["gabp-normal", "gabp-augmented", "dense"])
    args = parser.parse_args(argv)

    problem = build_toy_problem()
    sol = solve_problem(problem, "affine", args.linsolve, start=TOY_START)
    handle = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        handle.write("# constraints: " + "; ".join(f"{c.coefficients[0]:g} x1 + {c.coefficients[1]:g} x2 <= {c.rhs:g}"
                                                  for c in problem.constraints) + "\n")
        w = csv.writer(handle)
        w.writerow(["step", "x1", "x2", "objective", "step_length", "gabp_converged"])
        for rec in sol.trace:
            x1, x2 = rec.x[0], rec.x[1]
            w.writerow([rec.newton, repr(x1), repr(x2), repr(x1 + x2), repr(rec.step), rec.gabp_converged])
    finally:
        if handle is not sys.stdout:
            handle.close()
    print(f"final objective {sol.objective:.10f} after {len(sol.trace)} iterates "
          f"({sol.fallback_steps} dense fallbacks)", file=sys.stderr)


if __name__ == "__main__":
    main()
