"""Seeded random instances for tests, the ``check`` command and scripts."""

from __future__ import annotations

import math

import numpy as np

from .model import Constraint, LpProblem, SparseSymMatrix
from .oracle import MAX_BASES


def random_dominant_matrix(rng: np.random.Generator, n: int, density: float = 0.5,
                           nonneg: bool = False, margin: tuple[float, float] = (0.1, 1.0)) -> SparseSymMatrix:
    """Symmetric, strictly diagonally dominant, positive diagonal.

    Each off-diagonal pair is present with probability ``density``; row
    ``i`` gets diagonal ``sum_j |A_ij| + U(margin)``.
    """
    M = np.zeros((n, n))
    iu, ju = np.triu_indices(n, 1)
    present = rng.random(iu.size) < density
    vals = rng.uniform(0.1, 1.0, iu.size)
    if not nonneg:
        vals *= rng.choice([-1.0, 1.0], iu.size)
    M[iu[present], ju[present]] = vals[present]
    M = M + M.T
    np.fill_diagonal(M, np.abs(M).sum(axis=1) + rng.uniform(*margin, n))
    return SparseSymMatrix.from_dense(M)


def random_feasible_lp(rng: np.random.Generator, max_n: int = 30, max_p: int = 15,
                       max_bases: int = MAX_BASES, n: int | None = None, p: int | None = None) -> LpProblem:
    """A bounded LP with a strictly feasible point built in.

    Row 0 is a dense ``<=`` row with positive coefficients, which bounds
    the feasible set.  Remaining rows are mostly ``<=``, with some ``>=``
    and ``=`` rows; all are satisfied strictly (or exactly, for ``=``) by a
    hidden interior point.  Sizes are redrawn until the standard form has
    at most ``max_n`` columns, ``max_p`` rows and ``C(n, p) <= max_bases``.
    Passing both ``n`` and ``p`` fixes the standard-form shape instead.
    """
    if (n is None) != (p is None):
        raise ValueError("give both n and p or neither")
    if n is not None:
        if not 1 <= p < n:
            raise ValueError("need 1 <= p < n")
        kinds = _row_kinds(rng, p, int(rng.integers(0, p // 3 + 1)))
        k = n - sum(1 for r in kinds if r != "=")
    else:
        while True:
            k = int(rng.integers(1, 9))
            m = int(rng.integers(1, max_p + 1))
            kinds = _row_kinds(rng, m, None)
            n_std = k + sum(1 for r in kinds if r != "=")
            if (n_std <= max_n and kinds.count("=") < k and m < n_std
                    and math.comb(n_std, m) <= max_bases):
                break
    return _build(rng, k, kinds)


def _row_kinds(rng, m, equalities):
    if equalities is None:
        return ["<="] + [str(v) for v in rng.choice(["<=", "<=", "<=", ">=", "="], m - 1)]
    rest = ["="] * equalities + [str(v) for v in rng.choice(["<=", "<=", ">="], m - 1 - equalities)]
    return ["<="] + [rest[i] for i in rng.permutation(len(rest))]


def _build(rng, k, kinds) -> LpProblem:
    x_in = rng.uniform(0.5, 2.0, k)
    rows = []
    for r, kind in enumerate(kinds):
        if kind == "=":
            a = rng.uniform(-1.0, 1.0, k)
            rhs = float(a @ x_in)
        else:
            a = rng.uniform(0.1, 1.0, k)
            if r > 0:
                a *= rng.random(k) < 0.7
                if not a.any():
                    a[rng.integers(k)] = 1.0
            lhs = float(a @ x_in)
            rhs = lhs + rng.uniform(0.2, 2.0) if kind == "<=" else lhs - rng.uniform(0.1, 0.5) * lhs
        rows.append(Constraint(tuple(float(v) for v in np.round(a, 6)), kind, round(rhs, 6)))
    c = np.round(rng.uniform(-1.0, 1.0, k), 6)
    sense = "max" if rng.random() < 0.5 else "min"
    names = tuple(f"x{j + 1}" for j in range(k))
    return LpProblem(names, sense, tuple(float(v) for v in c), tuple(rows))
