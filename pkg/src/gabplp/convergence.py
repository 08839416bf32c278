"""Convergence-rate analysis for GaBP on diagonally dominant matrices.

Row ``i`` has dominance gap ``eps_i = |A_ii| - sum_{j != i} |A_ij|``.  Each
edge gets the pairwise parameters ``b_ij = A_ij`` and
``c_ij = A_ij + eps_i / |N(i)|``, and the rate is

    gamma = max_{i, j} |A_ij| / (|A_ij| + eps_i / |N(i)|)  < 1.

Accuracy ``eps * ||b||_inf`` then takes at most ``ceil(log eps / log gamma)``
rounds.  ``gamma_local`` is the per-node quantity a distributed
implementation would compute before a single global max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .model import SparseSymMatrix


def dominance_gaps(A: SparseSymMatrix) -> np.ndarray:
    gaps = np.abs(A.diagonal())
    for i, j in A.edges():
        v = abs(A.get(i, j))
        gaps[i] -= v
        gaps[j] -= v
    return gaps


def is_diagonally_dominant(A: SparseSymMatrix) -> bool:
    return bool(np.all(dominance_gaps(A) > 0))


def gamma_local(A: SparseSymMatrix, i: int, gaps: np.ndarray | None = None) -> float:
    nbrs = A.neighbors(i)
    if not nbrs:
        return 0.0
    if gaps is None:
        gaps = dominance_gaps(A)
    share = gaps[i] / len(nbrs)
    return max(abs(A.get(i, j)) / (abs(A.get(i, j)) + share) for j in nbrs)


def gamma(A: SparseSymMatrix) -> float:
    gaps = dominance_gaps(A)
    if not np.all(gaps > 0):
        raise InputError("rate parameter gamma needs a strictly diagonally dominant matrix")
    return max((gamma_local(A, i, gaps) for i in range(A.dim)), default=0.0)


def iteration_bound(gamma_value: float, eps: float) -> int | None:
    """Rounds guaranteeing ``|x* - x_t| < eps * ||b||_inf``; None if unbounded."""
    if not 0 < eps <= 1:
        raise InputError("eps must lie in (0, 1]")
    if gamma_value < 0:
        raise InputError("gamma must be nonnegative")
    if gamma_value >= 1:
        return None
    if gamma_value == 0:
        return 1
    if eps == 1:
        return 0
    ratio = math.log(eps) / math.log(gamma_value)
    # ratios within rounding of an integer should not gain a round
    nearest = round(ratio)
    if abs(ratio - nearest) <= 1e-12 * max(1.0, abs(ratio)):
        return int(nearest)
    return int(math.ceil(ratio))


def spectral_condition(A: SparseSymMatrix, max_iter: int = 200, rtol: float = 1e-10):
    """Estimate ``rho(|I - A'|)`` for the unit-diagonal scaling ``A'``.

    Power iteration runs on ``|I - A'| + I`` (same Perron vector, no
    oscillation on bipartite graphs) and the shift is removed afterwards.
    Returns ``(rho, rho < 1)``.
    """
    d = A.diagonal()
    if np.any(d <= 0):
        raise InputError("spectral condition needs a positive diagonal")
    n = A.dim
    if n == 0:
        return 0.0, True
    s = 1.0 / np.sqrt(d)
    R = np.zeros((n, n))
    for i, j in A.edges():
        R[i, j] = R[j, i] = abs(A.get(i, j)) * s[i] * s[j]
    if not R.any():
        return 0.0, True
    v = np.ones(n) / math.sqrt(n)
    est = 0.0
    for _ in range(max_iter):
        w = R @ v + v
        norm = float(np.linalg.norm(w))
        v = w / norm
        if abs(norm - est) <= rtol * norm:
            est = norm
            break
        est = norm
    rho = max(est - 1.0, 0.0)
    return rho, rho < 1.0


@dataclass(frozen=True)
class PairwiseDecomposition:
    """Per directed edge ``(i, j)``: ``b[(i, j)]`` and ``c[(i, j)]``."""

    b: dict
    c: dict
    row_residual: np.ndarray


def decomposition(A: SparseSymMatrix) -> PairwiseDecomposition:
    gaps = dominance_gaps(A)
    b, c = {}, {}
    residual = np.zeros(A.dim)
    for i in range(A.dim):
        nbrs = A.neighbors(i)
        total = 0.0
        for j in nbrs:
            a = A.get(i, j)
            b[(i, j)] = a
            c[(i, j)] = a + gaps[i] / len(nbrs)
            total += c[(i, j)]
        residual[i] = abs(total - A.get(i, i)) if nbrs else 0.0
    return PairwiseDecomposition(b, c, residual)


@dataclass(frozen=True)
class ConvergenceReport:
    dominant: bool
    gaps: np.ndarray
    gamma: float | None
    bound: int | None
    rho: float | None
    walk_summable: bool | None
    eps: float

    def lines(self) -> list[str]:
        fmt = lambda v: "n/a" if v is None else f"{v:.17g}"
        return [
            f"dominant: {'yes' if self.dominant else 'no'}",
            f"min_gap: {float(np.min(self.gaps)) if self.gaps.size else 0.0:.17g}",
            f"gamma: {fmt(self.gamma) if self.dominant else 'not-dominant'}",
            f"eps: {self.eps:.17g}",
            f"bound_rounds: {'unavailable' if self.bound is None else self.bound}",
            f"spectral_rho: {fmt(self.rho)}",
            "walk_summable: " + ("n/a" if self.walk_summable is None
                                 else ("yes" if self.walk_summable else "no")),
        ]


def analyze(A: SparseSymMatrix, eps: float = 1e-6) -> ConvergenceReport:
    gaps = dominance_gaps(A)
    dominant = bool(np.all(gaps > 0))
    g = gamma(A) if dominant else None
    bound = iteration_bound(g, eps) if dominant else None
    if np.all(A.diagonal() > 0):
        rho, ws = spectral_condition(A)
    else:
        rho, ws = None, None
    return ConvergenceReport(dominant, gaps, g, bound, rho, ws, eps)


def rounds_to_accuracy(A: SparseSymMatrix, b, eps: float, x_star=None, max_rounds: int = 10_000):
    """First round ``t`` with ``||x_t - x*||_inf <= eps ||b||_inf``.

    ``x_t`` are the GaBP marginal means after ``t`` rounds (``t = 0`` is the
    prior ``b_i / A_ii``).  Returns ``None`` if ``max_rounds`` pass first.
    """
    from .gabp import gabp_infer, gabp_init, gabp_round
    from .oracle import dense_solve

    b = np.asarray(b, dtype=float)
    if x_star is None:
        x_star = dense_solve(A.to_dense(), b)
    target = eps * float(np.max(np.abs(b), initial=0.0))
    state = gabp_init(A, b)
    for t in range(max_rounds + 1):
        if t:
            state = gabp_round(state)
        if float(np.max(np.abs(gabp_infer(state).means - x_star), initial=0.0)) <= target:
            return t
    return None
