"""Measured GaBP rounds against the rate bound on random dominant matrices.

    python scripts/bound_validity.py [--count 100] [--eps 1e-6] [--seed 2] [--mixed-signs]

For each matrix prints n, gamma, the bound, the first round whose means
are within eps * ||b||_inf of the exact solution, and their ratio.
"""

import argparse

import numpy as np

from gabplp.convergence import gamma, iteration_bound, rounds_to_accuracy
from gabplp.instances import random_dominant_matrix


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--count", type=int, default=100)
    parser.add_argument("--eps", type=float, default=1e-6)
    parser.add_argument("--seed", type=int, default=2)
    parser.add_argument("--max-n", type=int, default=50)
    parser.add_argument("--mixed-signs", action="store_true", help="allow negative off-diagonal entries")
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    ratios, violations = [], 0
    print(f"{'n':>4} {'gamma':>10} {'bound':>6} {'measured':>8} {'ratio':>7}")
    for _ in range(args.count):
        n = int(rng.integers(2, args.max_n + 1))
        A = random_dominant_matrix(rng, n, float(rng.uniform(0.1, 1.0)), nonneg=not args.mixed_signs)
        b = rng.normal(size=n)
        g = gamma(A)
        bound = iteration_bound(g, args.eps)
        t = rounds_to_accuracy(A, b, args.eps, max_rounds=10 * bound + 10)
        ratio = float("nan") if t is None else t / max(bound, 1)
        if t is None or t > bound:
            violations += 1
        else:
            ratios.append(ratio)
        print(f"{n:>4} {g:>10.4f} {bound:>6} {'-' if t is None else t:>8} {ratio:>7.3f}")
    print(f"violations {violations}/{args.count}; mean ratio {np.mean(ratios):.3f}, max {np.max(ratios):.3f}")


if __name__ == "__main__":
    main()
