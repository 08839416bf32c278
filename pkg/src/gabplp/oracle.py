"""Dense reference solvers.

These deliberately share no code path with the message-passing solver or
the interior-point loops: elimination instead of GaBP, Cholesky instead of
message passing, exhaustive basis enumeration instead of a path-following
method.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InputError, SingularMatrixError
from .model import LpProblem, as_matrix, as_vector, recover_original, to_standard_form

MAX_BASES = 60_000


def dense_solve(A, b) -> np.ndarray:
    """Gaussian elimination with partial pivoting."""
    M = as_matrix(A, "A").copy()
    x = as_vector(b, "b").copy()
    n = M.shape[0]
    if M.shape != (n, n) or x.shape != (n,):
        raise InputError(f"need a square system, got A {M.shape}, b {x.shape}")
    scale = np.max(np.abs(M)) if M.size else 0.0
    threshold = 1e-12 * scale
    for k in range(n):
        piv = k + int(np.argmax(np.abs(M[k:, k])))
        if abs(M[piv, k]) <= threshold or scale == 0.0:
            raise SingularMatrixError(f"pivot {k} below threshold; matrix is singular")
        if piv != k:
            M[[k, piv]] = M[[piv, k]]
            x[[k, piv]] = x[[piv, k]]
        factors = M[k + 1:, k] / M[k, k]
        M[k + 1:, k:] -= np.outer(factors, M[k, k:])
        x[k + 1:] -= factors * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - M[k, k + 1:] @ x[k + 1:]) / M[k, k]
    return x


def dense_least_squares(F, g) -> np.ndarray:
    """``(F.T F)^{-1} F.T g`` through a Cholesky factorization."""
    F = as_matrix(F, "F")
    g = as_vector(g, "g")
    if g.shape != (F.shape[0],):
        raise InputError("g length differs from the row count of F")
    return spd_solve(F.T @ F, F.T @ g)


def spd_solve(M, rhs) -> np.ndarray:
    try:
        factor = scipy.linalg.cho_factor(M, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"matrix is not numerically positive definite: {exc}") from None
    return scipy.linalg.cho_solve(factor, rhs)


def is_positive_definite(M) -> bool:
    try:
        scipy.linalg.cholesky(M, lower=True)
    except np.linalg.LinAlgError:
        return False
    return True


@dataclass(frozen=True)
class VertexResult:
    feasible: bool
    objective: float | None
    vertices: tuple[np.ndarray, ...] = ()
    bases_checked: int = 0


def vertex_enumerate(problem: LpProblem, tol: float = 1e-9, max_bases: int = MAX_BASES) -> VertexResult:
    """Best objective over all basic feasible solutions of the standard form.

    Assumes the optimum is attained (bounded problem).  Returns every
    distinct original-space vertex within ``tol`` of the best objective.
    """
    std = to_standard_form(problem)
    A, b, c = std.A, std.b, std.c
    p, n = A.shape
    count = math.comb(n, p) if p <= n else 0
    if count > max_bases:
        raise InputError(f"vertex enumeration over {count} bases exceeds the guard of {max_bases}")

    best = math.inf
    found: list[tuple[float, np.ndarray]] = []
    scale = 1.0 + float(np.max(np.abs(b), initial=0.0))
    bases = itertools.combinations(range(n), p)
    while True:
        chunk = np.array(list(itertools.islice(bases, 4096)), dtype=np.intp)
        if chunk.size == 0:
            break
        B = np.transpose(A[:, chunk], (1, 0, 2))
        keep = np.linalg.cond(B) < 1e12
        if not keep.any():
            continue
        chunk, B = chunk[keep], B[keep]
        xb = np.linalg.solve(B, np.broadcast_to(b, (len(B), p))[..., None])[..., 0]
        ok = np.all(xb >= -tol * scale, axis=1)
        ok &= np.max(np.abs(np.einsum("kij,kj->ki", B, xb) - b), axis=1, initial=0.0) <= 1e-9 * scale
        for basis, vals in zip(chunk[ok], xb[ok]):
            x = np.zeros(n)
            x[basis] = np.maximum(vals, 0.0)
            value = float(c @ x)
            found.append((value, x))
            best = min(best, value)
    if not found:
        return VertexResult(False, None, (), count)

    atol = tol * (1.0 + abs(best))
    vertices: list[np.ndarray] = []
    for value, x in found:
        if value <= best + atol:
            xo = recover_original(x, std.provenance)
            if not any(np.allclose(xo, v, atol=1e-9, rtol=0) for v in vertices):
                vertices.append(xo)
    vertices.sort(key=tuple)
    return VertexResult(True, std.objective_sign * best + std.offset, tuple(vertices), count)
