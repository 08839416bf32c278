"""Problem representations and the small linear-algebra value types.

Vectors and dense matrices are plain float64 numpy arrays; ``as_vector``
and ``as_matrix`` are the validating entry points.  ``SparseSymMatrix``
stores the upper triangle of a symmetric matrix and is the graph on which
GaBP runs.

Orientation: the constraint matrix ``A`` of a :class:`StandardLp` is
``p x n`` (constraints by variables) so that ``A @ x == b`` for ``x`` of
length ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateProblemError, InputError, MalformedProblemError

RELATIONS = ("<=", ">=", "=")
SENSES = ("min", "max")


def as_vector(values, name="vector") -> np.ndarray:
    v = np.array(values, dtype=float).reshape(-1) if np.ndim(values) else np.array([float(values)])
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} has non-finite entries")
    return v


def as_matrix(values, name="matrix") -> np.ndarray:
    m = np.array(values, dtype=float)
    if m.ndim != 2:
        raise InputError(f"{name} must be two-dimensional, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} has non-finite entries")
    return m


class SparseSymMatrix:
    """Symmetric sparse matrix stored as its nonzero upper triangle.

    ``entries`` maps ``(i, j)`` with ``i <= j`` to a nonzero value; the pair
    stands for both ``(i, j)`` and ``(j, i)``.  Instances are treated as
    immutable once built.
    """

    def __init__(self, dim: int, entries: Mapping[tuple[int, int], float]):
        if dim < 0:
            raise InputError("dimension must be nonnegative")
        clean: dict[tuple[int, int], float] = {}
        seen = set()
        for (i, j), value in entries.items():
            i, j = int(i), int(j)
            if i > j:
                i, j = j, i
            if not (0 <= i < dim and 0 <= j < dim):
                raise InputError(f"entry ({i}, {j}) outside a {dim}x{dim} matrix")
            value = float(value)
            if not np.isfinite(value):
                raise InputError(f"entry ({i}, {j}) is not finite")
            if (i, j) in seen:
                raise InputError(f"duplicate entry for pair ({i}, {j})")
            seen.add((i, j))
            if value != 0.0:
                clean[(i, j)] = value
        self.dim = int(dim)
        self._entries = dict(sorted(clean.items()))
        nbrs: list[list[int]] = [[] for _ in range(self.dim)]
        for i, j in self._entries:
            if i != j:
                nbrs[i].append(j)
                nbrs[j].append(i)
        self._neighbors = tuple(tuple(sorted(n)) for n in nbrs)

    @classmethod
    def from_dense(cls, M, sym_tol: float = 1e-12) -> "SparseSymMatrix":
        M = as_matrix(M)
        n, m = M.shape
        if n != m:
            raise InputError(f"matrix must be square, got {n}x{m}")
        scale = max(np.max(np.abs(M)), 1.0) if M.size else 1.0
        if np.max(np.abs(M - M.T), initial=0.0) > sym_tol * scale:
            raise InputError("matrix is not symmetric")
        iu, ju = np.nonzero(np.triu(M))
        return cls(n, {(int(i), int(j)): M[i, j] for i, j in zip(iu, ju)})

    @property
    def entries(self) -> dict[tuple[int, int], float]:
        return dict(self._entries)

    def get(self, i: int, j: int) -> float:
        if i > j:
            i, j = j, i
        return self._entries.get((i, j), 0.0)

    def diagonal(self) -> np.ndarray:
        return np.array([self._entries.get((i, i), 0.0) for i in range(self.dim)])

    def neighbors(self, i: int) -> tuple[int, ...]:
        """Off-diagonal neighbors of node ``i`` in ascending order."""
        return self._neighbors[i]

    def edges(self) -> list[tuple[int, int]]:
        """Unordered off-diagonal pairs ``(i, j)``, ``i < j``."""
        return [(i, j) for (i, j) in self._entries if i != j]

    @property
    def off_diagonal_count(self) -> int:
        return sum(1 for (i, j) in self._entries if i != j)

    def to_dense(self) -> np.ndarray:
        M = np.zeros((self.dim, self.dim))
        for (i, j), v in self._entries.items():
            M[i, j] = v
            M[j, i] = v
        return M

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.dim)
        for (i, j), v in self._entries.items():
            out[i] += v * x[j]
            if i != j:
                out[j] += v * x[i]
        return out

    def permuted(self, perm: Sequence[int]) -> "SparseSymMatrix":
        """Symmetric permutation: new index ``k`` is old index ``perm[k]``."""
        inv = {old: new for new, old in enumerate(perm)}
        return SparseSymMatrix(self.dim, {(inv[i], inv[j]): v for (i, j), v in self._entries.items()})

    def __eq__(self, other):
        if not isinstance(other, SparseSymMatrix):
            return NotImplemented
        return self.dim == other.dim and self._entries == other._entries

    def __repr__(self):
        return f"SparseSymMatrix(dim={self.dim}, nnz_upper={len(self._entries)})"


@dataclass(frozen=True)
class Constraint:
    coefficients: tuple[float, ...]
    relation: str
    rhs: float

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise MalformedProblemError(f"unknown relation {self.relation!r}")
        object.__setattr__(self, "coefficients", tuple(float(v) for v in self.coefficients))
        object.__setattr__(self, "rhs", float(self.rhs))


@dataclass(frozen=True)
class LpProblem:
    """User-facing LP: named variables, a sense, and mixed constraints.

    ``nonneg[j]`` is False for free variables.  ``offset`` is a constant
    added to the objective; it never affects the optimizer.
    """

    names: tuple[str, ...]
    sense: str
    objective: tuple[float, ...]
    constraints: tuple[Constraint, ...]
    nonneg: tuple[bool, ...] = None
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "objective", tuple(float(v) for v in self.objective))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        nonneg = (True,) * len(self.names) if self.nonneg is None else tuple(bool(f) for f in self.nonneg)
        object.__setattr__(self, "nonneg", nonneg)
        object.__setattr__(self, "offset", float(self.offset))
        if self.sense not in SENSES:
            raise MalformedProblemError(f"objective sense must be min or max, got {self.sense!r}")
        n = len(self.names)
        if len(set(self.names)) != n:
            raise MalformedProblemError("variable names must be unique")
        if len(self.objective) != n or len(self.nonneg) != n:
            raise MalformedProblemError("objective/nonneg length differs from variable count")
        for k, con in enumerate(self.constraints):
            if len(con.coefficients) != n:
                raise MalformedProblemError(
                    f"constraint {k} has {len(con.coefficients)} coefficients for {n} variables")

    @property
    def num_variables(self) -> int:
        return len(self.names)

    def evaluate(self, x) -> float:
        return float(np.dot(self.objective, x)) + self.offset

    def is_feasible(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x[np.array(self.nonneg, dtype=bool)] < -tol):
            return False
        for con in self.constraints:
            lhs = float(np.dot(con.coefficients, x))
            scale = tol * (1.0 + abs(con.rhs))
            if con.relation == "<=" and lhs > con.rhs + scale:
                return False
            if con.relation == ">=" and lhs < con.rhs - scale:
                return False
            if con.relation == "=" and abs(lhs - con.rhs) > scale:
                return False
        return True


@dataclass(frozen=True)
class Provenance:
    """Where each standard-form column came from.

    ``columns[k]`` is ``("var", j, sign)`` for a (possibly split) original
    variable ``j`` or ``("slack", row, sign)`` for a slack/surplus column.
    """

    columns: tuple[tuple[str, int, float], ...]
    num_original: int

    @classmethod
    def identity(cls, n: int) -> "Provenance":
        return cls(tuple(("var", j, 1.0) for j in range(n)), n)


@dataclass(frozen=True, eq=False)
class StandardLp:
    """``min c @ x  s.t.  A @ x == b, x >= 0`` with ``A`` of shape ``(p, n)``.

    ``objective_sign`` is -1 when the source problem was a maximization, so
    the original objective is ``objective_sign * c @ x + offset``.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    provenance: Provenance = None
    objective_sign: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        b = as_vector(self.b, "b")
        c = as_vector(self.c, "c")
        p, n = A.shape
        if b.shape != (p,) or c.shape != (n,):
            raise MalformedProblemError(f"shape mismatch: A {A.shape}, b {b.shape}, c {c.shape}")
        for arr in (A, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        if self.provenance is None:
            object.__setattr__(self, "provenance", Provenance.identity(n))

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def p(self) -> int:
        return self.A.shape[0]

    @property
    def wide(self) -> bool:
        """True when ``p < n``, the shape interior-point methods assume."""
        return self.p < self.n

    def has_full_row_rank(self) -> bool:
        return row_rank(self.A) == self.p

    def require_full_row_rank(self):
        if not self.has_full_row_rank():
            raise DegenerateProblemError(
                f"constraint matrix ({self.p}x{self.n}) does not have full row rank")

    def original_objective(self, x_std) -> float:
        return self.objective_sign * float(self.c @ np.asarray(x_std, dtype=float)) + self.offset


def row_rank(A, rel_tol: float = 1e-10) -> int:
    """Rank by Gaussian elimination with partial pivoting.

    A pivot counts when its magnitude exceeds ``rel_tol`` times the largest
    entry of ``A``.
    """
    M = np.array(A, dtype=float)
    if M.size == 0:
        return 0
    threshold = rel_tol * np.max(np.abs(M))
    if threshold == 0.0:
        return 0
    rows, cols = M.shape
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        pivot = rank + int(np.argmax(np.abs(M[rank:, col])))
        if abs(M[pivot, col]) <= threshold:
            continue
        M[[rank, pivot]] = M[[pivot, rank]]
        M[rank + 1:] -= np.outer(M[rank + 1:, col] / M[rank, col], M[rank])
        rank += 1
    return rank


def to_standard_form(problem: LpProblem) -> StandardLp:
    if problem.num_variables == 0 or not problem.constraints:
        raise MalformedProblemError("problem needs at least one variable and one constraint")
    columns: list[tuple[str, int, float]] = []
    for j, nonneg in enumerate(problem.nonneg):
        columns.append(("var", j, 1.0))
        if not nonneg:
            columns.append(("var", j, -1.0))
    for row, con in enumerate(problem.constraints):
        if con.relation == "<=":
            columns.append(("slack", row, 1.0))
        elif con.relation == ">=":
            columns.append(("slack", row, -1.0))

    p, n = len(problem.constraints), len(columns)
    A = np.zeros((p, n))
    c = np.zeros(n)
    sign = -1.0 if problem.sense == "max" else 1.0
    for k, (kind, idx, s) in enumerate(columns):
        if kind == "var":
            A[:, k] = [s * con.coefficients[idx] for con in problem.constraints]
            c[k] = sign * s * problem.objective[idx]
        else:
            A[idx, k] = s
    b = np.array([con.rhs for con in problem.constraints])
    return StandardLp(A, b, c, Provenance(tuple(columns), problem.num_variables),
                      objective_sign=sign, offset=problem.offset)


def split_pairs(provenance: Provenance) -> list[tuple[int, int]]:
    """Column pairs ``(k+, k-)`` of each split free variable."""
    plus: dict[int, int] = {}
    pairs = []
    for k, (kind, idx, s) in enumerate(provenance.columns):
        if kind != "var":
            continue
        if s > 0:
            plus[idx] = k
        elif idx in plus:
            pairs.append((plus[idx], k))
    return pairs


def recover_original(x_std, provenance: Provenance) -> np.ndarray:
    x_std = np.asarray(x_std, dtype=float)
    if x_std.shape != (len(provenance.columns),):
        raise InputError(
            f"expected {len(provenance.columns)} standard-form values, got {x_std.shape}")
    x = np.zeros(provenance.num_original)
    for value, (kind, idx, s) in zip(x_std, provenance.columns):
        if kind == "var":
            x[idx] += s * value
    return x


def lift_point(problem: LpProblem, std: StandardLp, x_orig, shift: float = 0.0) -> np.ndarray:
    """Map an original-space point to the standard-form point it came from.

    Split variables get ``x+ = max(x, 0) + shift`` and ``x- = max(-x, 0) +
    shift``; a positive ``shift`` keeps them strictly interior.
    """
    x_orig = as_vector(x_orig, "x")
    if x_orig.shape != (problem.num_variables,):
        raise InputError("point has the wrong number of variables")
    out = np.zeros(std.n)
    for k, (kind, idx, s) in enumerate(std.provenance.columns):
        if kind == "var":
            if problem.nonneg[idx]:
                out[k] = x_orig[idx]
            else:
                out[k] = max(s * x_orig[idx], 0.0) + shift
        else:
            con = problem.constraints[idx]
            out[k] = s * (con.rhs - float(np.dot(con.coefficients, x_orig)))
    return out


def make_problem(objective: Iterable[float], rows: Iterable[tuple[Iterable[float], str, float]],
                 sense: str = "min", names: Sequence[str] | None = None,
                 nonneg: Sequence[bool] | None = None) -> LpProblem:
    """Shorthand constructor used by tests and generators."""
    objective = tuple(objective)
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(len(objective)))
    cons = tuple(Constraint(tuple(coef), rel, rhs) for coef, rel, rhs in rows)
    return LpProblem(tuple(names), sense, objective, cons, None if nonneg is None else tuple(nonneg))


@dataclass(frozen=True)
class TraceRecord:
    """One computed Newton step: the point it was computed at and its outcome.

    ``step`` is the accepted step length (0 for the terminating check).
    ``lambda2`` is the Newton decrement for the barrier methods; the
    primal-dual solver stores its squared residual norm there.
    """

    outer: int
    newton: int
    x: tuple[float, ...]
    objective: float
    mu: float
    lambda2: float
    step: float
    gabp_rounds: int
    gabp_converged: bool

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        for name in ("objective", "mu", "lambda2", "step"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "gabp_rounds", int(self.gabp_rounds))
        object.__setattr__(self, "gabp_converged", bool(self.gabp_converged))
