"""Gaussian belief propagation for symmetric linear systems ``A x = b``.

Each off-diagonal nonzero ``A_ij`` is an edge of the graphical model and
carries two directed messages, a precision ``P_ij`` and a mean ``mu_ij``.
Rounds are synchronous: every message of round ``t + 1`` is computed from
round ``t`` messages only.  Node sums are accumulated sequentially in
ascending neighbor order, starting from the node prior, so results are
bit-reproducible.

Messages live in flat arrays indexed by directed edge.  The edge list is
sorted by (source, target); ``GabpGraph`` precomputes, for every edge
``i -> j``, the indices of the incoming edges ``k -> i`` with ``k != j`` so a
round is a handful of gathers and row-wise cumulative sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (GabpNotConvergedError, InputError, NumericalBreakdownError,
                     SingularPriorError)
from .model import SparseSymMatrix, as_matrix, as_vector

DEFAULT_TOL = 1e-9
# solver-facing runs give up once messages grow this much past their best
DIVERGENCE = 1e6
AUGMENTED_LOADING = 1e-8


class GabpGraph:
    """Directed-edge layout of a :class:`SparseSymMatrix`."""

    def __init__(self, A: SparseSymMatrix):
        self.matrix = A
        n = A.dim
        src, dst = [], []
        for i in range(n):
            for j in A.neighbors(i):
                src.append(i)
                dst.append(j)
        self.src = np.array(src, dtype=np.intp)
        self.dst = np.array(dst, dtype=np.intp)
        self.num_edges = len(src)
        self.weight = np.array([A.get(i, j) for i, j in zip(src, dst)])
        index = {(i, j): e for e, (i, j) in enumerate(zip(src, dst))}

        # incoming[i] = edges k -> i in ascending k; pad slot is num_edges
        pad = self.num_edges
        incoming = [[index[(k, i)] for k in A.neighbors(i)] for i in range(n)]
        width = max((len(r) for r in incoming), default=0)
        self.incoming = np.full((n, width), pad, dtype=np.intp)
        for i, row in enumerate(incoming):
            self.incoming[i, :len(row)] = row

        self.excluding = np.full((self.num_edges, max(width - 1, 0)), pad, dtype=np.intp)
        for e, (i, j) in enumerate(zip(src, dst)):
            row = [index[(k, i)] for k in A.neighbors(i) if k != j]
            self.excluding[e, :len(row)] = row
        self.reads_per_round = int(sum(len(A.neighbors(i)) - 1 for i in src))

    def edge(self, e: int) -> tuple[int, int]:
        return int(self.src[e]), int(self.dst[e])


@dataclass(frozen=True, eq=False)
class GabpState:
    """Messages after ``round`` synchronous rounds.

    ``P_msg[e]`` and ``mu_msg[e]`` belong to directed edge
    ``graph.src[e] -> graph.dst[e]``.  ``message_updates`` and
    ``message_reads`` are cumulative instrumentation counters.
    """

    graph: GabpGraph
    shift: np.ndarray
    P_prior: np.ndarray
    mu_prior: np.ndarray
    P_msg: np.ndarray
    mu_msg: np.ndarray
    round: int = 0
    message_updates: int = 0
    message_reads: int = 0

    @property
    def matrix(self) -> SparseSymMatrix:
        return self.graph.matrix

    def messages(self) -> dict[tuple[int, int], tuple[float, float]]:
        return {self.graph.edge(e): (float(self.P_msg[e]), float(self.mu_msg[e]))
                for e in range(self.graph.num_edges)}


@dataclass(frozen=True)
class GabpResult:
    means: np.ndarray
    precisions: np.ndarray
    rounds: int
    converged: bool
    final_delta: float
    message_updates: int = 0


def gabp_init(A: SparseSymMatrix, b, graph: GabpGraph | None = None) -> GabpState:
    b = as_vector(b, "shift vector")
    if b.shape != (A.dim,):
        raise InputError(f"shift vector has length {b.size}, matrix dimension is {A.dim}")
    diag = A.diagonal()
    zero = np.flatnonzero(diag == 0.0)
    if zero.size:
        raise SingularPriorError(int(zero[0]))
    if graph is None:
        graph = GabpGraph(A)
    elif graph.matrix is not A:
        raise InputError("graph was built for a different matrix")
    E = graph.num_edges
    return GabpState(graph, b, diag.copy(), b / diag, np.zeros(E), np.zeros(E))


def _sequential_sum(first: np.ndarray, rest: np.ndarray) -> np.ndarray:
    """Row-wise ``first + rest[:, 0] + rest[:, 1] + ...`` in that order."""
    if rest.shape[1] == 0:
        return first.copy()
    return np.cumsum(np.concatenate([first[:, None], rest], axis=1), axis=1)[:, -1]


def _all_nonzero_finite(v: np.ndarray) -> bool:
    return bool(np.isfinite(v).all() and v.all())


def _padded(values: np.ndarray) -> np.ndarray:
    return np.append(values, 0.0)


def gabp_round(s: GabpState) -> GabpState:
    g = s.graph
    next_round = s.round + 1
    if g.num_edges == 0:
        return GabpState(g, s.shift, s.P_prior, s.mu_prior, s.P_msg, s.mu_msg,
                         next_round, s.message_updates, s.message_reads)

    P_in = _padded(s.P_msg)
    h_in = _padded(s.P_msg * s.mu_msg)
    P_src = s.P_prior[g.src]
    with np.errstate(all="ignore"):
        P_excl = _sequential_sum(P_src, P_in[g.excluding])
        h_excl = _sequential_sum(P_src * s.mu_prior[g.src], h_in[g.excluding])
        if not _all_nonzero_finite(P_excl):
            bad = np.flatnonzero((P_excl == 0.0) | ~np.isfinite(P_excl))
            raise NumericalBreakdownError("cavity precision P_i\\j is zero or non-finite",
                                          next_round, g.edge(bad[0]))
        mu_excl = h_excl / P_excl
        P_new = -g.weight * g.weight / P_excl
        if not _all_nonzero_finite(P_new):
            bad = np.flatnonzero((P_new == 0.0) | ~np.isfinite(P_new))
            raise NumericalBreakdownError("message precision P_ij is zero or non-finite",
                                          next_round, g.edge(bad[0]))
        mu_new = -g.weight * mu_excl / P_new
    if not np.isfinite(mu_new).all():
        bad = np.flatnonzero(~np.isfinite(mu_new))
        raise NumericalBreakdownError("message mean overflowed", next_round, g.edge(bad[0]))
    return GabpState(g, s.shift, s.P_prior, s.mu_prior, P_new, mu_new, next_round,
                     s.message_updates + g.num_edges, s.message_reads + g.reads_per_round)


def message_delta(prev: GabpState, nxt: GabpState) -> float:
    if prev.graph is not nxt.graph:
        raise InputError("states belong to different graphs")
    if prev.graph.num_edges == 0:
        return 0.0
    return float(max(np.max(np.abs(nxt.P_msg - prev.P_msg)),
                     np.max(np.abs(nxt.mu_msg - prev.mu_msg))))


def gabp_converged(prev: GabpState, nxt: GabpState, tol: float) -> bool:
    return message_delta(prev, nxt) <= tol


def gabp_infer(s: GabpState, converged: bool = False, final_delta: float = math.nan) -> GabpResult:
    g = s.graph
    P_in = _padded(s.P_msg)
    h_in = _padded(s.P_msg * s.mu_msg)
    with np.errstate(all="ignore"):
        P = _sequential_sum(s.P_prior, P_in[g.incoming])
        h = _sequential_sum(s.P_prior * s.mu_prior, h_in[g.incoming])
        bad = np.flatnonzero((P == 0.0) | ~np.isfinite(P))
        if bad.size:
            raise NumericalBreakdownError(f"marginal precision of node {bad[0]} is zero",
                                          s.round)
        means = h / P
    return GabpResult(means, P, s.round, converged, final_delta, s.message_updates)


def default_max_rounds(A: SparseSymMatrix, tol: float) -> int:
    """Rate bound plus one when the matrix is diagonally dominant, else ``10 * dim``.

    The bound counts rounds until the means are accurate; seeing that the
    messages stopped moving takes one more round.
    """
    from .convergence import gamma, is_diagonally_dominant, iteration_bound

    if is_diagonally_dominant(A):
        bound = iteration_bound(gamma(A), min(tol, 1.0))
        if bound is not None:
            return bound + 1
    return max(10 * A.dim, 1)


def gabp_solve(A: SparseSymMatrix, b, tol: float = DEFAULT_TOL,
               max_rounds: int | None = None, divergence: float | None = None) -> GabpResult:
    """Run synchronous rounds until messages settle within ``tol``.

    Hitting ``max_rounds`` is not an error; the result carries
    ``converged=False``.  With ``divergence`` set, the run also stops early
    (unconverged) once the message change exceeds ``divergence`` times the
    smallest change seen so far.  Breakdowns (zero cavity precision, overflow) raise
    :class:`NumericalBreakdownError`.
    """
    if not tol > 0:
        raise InputError("tol must be positive")
    if max_rounds is None:
        max_rounds = default_max_rounds(A, tol)
    if max_rounds < 1:
        raise InputError("max_rounds must be at least 1")
    state = gabp_init(A, b)
    delta = smallest = math.inf
    for _ in range(max_rounds):
        nxt = gabp_round(state)
        delta = message_delta(state, nxt)
        state = nxt
        if delta <= tol:
            return gabp_infer(state, True, delta)
        smallest = min(smallest, delta)
        if divergence is not None and delta > divergence * smallest:
            break
    return gabp_infer(state, False, delta)


@dataclass
class LsqDiagnostics:
    mode: str
    rounds: int = 0
    converged: bool = False
    final_delta: float = math.nan
    loading: float = 0.0
    dominant: bool = False
    max_rounds: int = 0
    message_updates: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.converged and self.error is None


def _unit_diagonal_system(M: np.ndarray, rhs: np.ndarray):
    """Scale ``M y = rhs`` to unit diagonal and unit-magnitude right-hand side.

    GaBP iterates are equivariant under this scaling, so it changes nothing
    but the meaning of the absolute message tolerance.
    """
    d = np.sqrt(np.abs(np.diag(M)))
    d[d == 0.0] = 1.0
    Ms = M / np.outer(d, d)
    r = rhs / d
    scale = float(np.max(np.abs(r))) if r.size else 0.0
    if scale == 0.0:
        scale = 1.0
    return Ms, r / scale, d, scale


def gabp_dense_run(M: np.ndarray, rhs: np.ndarray, diag: LsqDiagnostics, tol, max_rounds):
    A = SparseSymMatrix.from_dense(M, sym_tol=1e-10)
    from .convergence import is_diagonally_dominant

    diag.dominant = is_diagonally_dominant(A)
    diag.max_rounds = max_rounds if max_rounds is not None else default_max_rounds(A, tol)
    try:
        res = gabp_solve(A, rhs, tol=tol, max_rounds=diag.max_rounds, divergence=DIVERGENCE)
    except NumericalBreakdownError as exc:
        diag.error = str(exc)
        return np.full(A.dim, np.nan)
    diag.rounds = res.rounds
    diag.converged = res.converged
    diag.final_delta = res.final_delta
    diag.message_updates = res.message_updates
    return res.means


def gabp_normal_solve(F, rhs, mode: str = "normal", tol: float = DEFAULT_TOL,
                      max_rounds: int | None = None):
    """Solve ``F.T @ F @ w = rhs`` by GaBP.

    ``mode="normal"`` runs on the ``p x p`` Gram matrix.  ``mode="augmented"``
    runs on ``[[-I, F], [F.T, delta*I]]`` with shift ``(0, rhs)``, whose
    lower block solves ``(F.T F + delta I) w = rhs``.
    """
    F = as_matrix(F, "F")
    rhs = as_vector(rhs, "rhs")
    n, p = F.shape
    if rhs.shape != (p,):
        raise InputError(f"rhs has length {rhs.size}, expected {p}")
    if mode == "normal":
        diag = LsqDiagnostics("normal")
        Ms, r, d, scale = _unit_diagonal_system(F.T @ F, rhs)
        w = gabp_dense_run(Ms, r, diag, tol, max_rounds)
        return w * scale / d, diag
    if mode == "augmented":
        diag = LsqDiagnostics("augmented", loading=AUGMENTED_LOADING)
        C = np.block([[-np.eye(n), F], [F.T, AUGMENTED_LOADING * np.eye(p)]])
        shift = np.concatenate([np.zeros(n), rhs])
        scale = float(np.max(np.abs(shift))) or 1.0
        w = gabp_dense_run(C, shift / scale, diag, tol, max_rounds)
        return w[n:] * scale, diag
    raise InputError(f"unknown least-squares mode {mode!r}")


def gabp_least_squares(F, g, mode: str = "normal", tol: float = DEFAULT_TOL,
                       max_rounds: int | None = None):
    """``argmin_y ||F y - g||`` as the mean of a Gaussian, inferred by GaBP.

    ``mode="normal"`` solves ``(F.T F) y = F.T g``.  ``mode="augmented"``
    runs GaBP on the joint model ``C = [[-I, F], [F.T, 0]]`` (zero block
    loaded with ``AUGMENTED_LOADING``) with the residual block carrying
    ``g``; the last ``p`` marginal means are ``y``.

    Returns ``(y, diagnostics)``.  Breakdown and non-convergence are
    reported in the diagnostics rather than raised.
    """
    F = as_matrix(F, "F")
    g = as_vector(g, "g")
    n, p = F.shape
    if not n >= p >= 1:
        raise InputError(f"need n >= p >= 1, F is {n}x{p}")
    if g.shape != (n,):
        raise InputError(f"g has length {g.size}, expected {n}")
    if mode == "normal":
        return gabp_normal_solve(F, F.T @ g, "normal", tol, max_rounds)
    if mode == "augmented":
        diag = LsqDiagnostics("augmented", loading=AUGMENTED_LOADING)
        C = np.block([[-np.eye(n), F], [F.T, AUGMENTED_LOADING * np.eye(p)]])
        shift = np.concatenate([g, np.zeros(p)])
        scale = float(np.max(np.abs(shift))) or 1.0
        z = gabp_dense_run(C, shift / scale, diag, tol, max_rounds)
        return z[n:] * scale, diag
    raise InputError(f"unknown least-squares mode {mode!r}")


def require_converged(diag: LsqDiagnostics, what: str = "GaBP"):
    if diag.error is not None:
        raise GabpNotConvergedError(f"{what} broke down: {diag.error}", diag)
    if not diag.converged:
        raise GabpNotConvergedError(
            f"{what} did not converge in {diag.rounds} rounds (delta {diag.final_delta:.3g})", diag)
