"""Infeasible-start primal-dual path following.

The central path solves ``A x = b``, ``A.T y + z = c``, ``X z = mu 1`` with
``x, z > 0``.  Newton's method on that system gives the block system

    [ 0   A.T  I ] [dx]   [ r_d ]        r_p = b - A x
    [ A   0    0 ] [dy] = [ r_p ]        r_d = c - A.T y - z
    [ Z   0    X ] [dz]   [ r_c ]        r_c = mu 1 - X z

(rows ordered so that the block right-hand side matches the block rows).
Multiplying the last block row by ``Z^-1`` makes it symmetric.  Eliminating
``dx`` and ``dz`` leaves

    (A Z^-1 X A.T) dy = A Z^-1 X (c - mu X^-1 1 - A.T y) + b - A x,
    dz = r_d - A.T dy,
    dx = X Z^-1 (A.T dy + mu X^-1 1 - c + A.T y).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .barrier import (BarrierConfig, barrier_solve, bound_split_columns, check_split_bound, extend_point,
                      find_interior_point)
from .errors import (GabpNotConvergedError, InputError, IterationLimitError, LineSearchStalledError,
                     UnboundedProblemError)
from .gabp import (AUGMENTED_LOADING, DEFAULT_TOL, LsqDiagnostics, gabp_dense_run, gabp_normal_solve,
                   require_converged)
from .model import SparseSymMatrix, StandardLp, TraceRecord, as_vector
from .oracle import spd_solve

log = logging.getLogger(__name__)

PD_MODES = ("explicit-gabp", "full-gabp", "dense-oracle")
REFINE_STEPS = 2


@dataclass(frozen=True)
class PdIterate:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, as_vector(getattr(self, name), name))
        if np.any(self.x <= 0) or np.any(self.z <= 0):
            raise InputError("primal-dual iterate needs x > 0 and z > 0")

    @property
    def gap(self) -> float:
        return float(self.x @ self.z)


@dataclass
class PrimalDualConfig:
    sigma: float = 0.1
    tau: float = 0.99
    eps_outer: float = 1e-8
    alpha: float = 1e-4
    beta: float = 0.5
    gabp_tol: float = 1e-10
    gabp_max_rounds: int | None = None
    linsolve: str = "explicit-gabp"
    fallback: bool = True
    max_iter: int = 200

    def __post_init__(self):
        if not 0 < self.sigma < 1:
            raise InputError("sigma must lie in (0, 1)")
        if not 0 < self.tau < 1:
            raise InputError("tau must lie in (0, 1)")
        if not (self.eps_outer > 0 and self.gabp_tol > 0):
            raise InputError("tolerances must be positive")
        if not 0 < self.alpha < 0.5 or not 0 < self.beta < 1:
            raise InputError("line-search parameters out of range")
        if self.linsolve not in PD_MODES:
            raise InputError(f"linsolve must be one of {PD_MODES}")


def kkt_residuals(lp: StandardLp, it: PdIterate, mu: float):
    r_p = lp.b - lp.A @ it.x
    r_d = lp.c - lp.A.T @ it.y - it.z
    r_c = mu - it.x * it.z
    return r_p, r_d, r_c


def assemble_symmetric_kkt(lp: StandardLp, it: PdIterate, mu: float):
    """Symmetrized Newton matrix of size ``2n + p`` and its right-hand side.

    Unknown order is ``(dx, dy, dz)``; the right-hand side is
    ``(r_d, r_p, Z^-1 r_c)`` so each block lines up with its block row.
    """
    if np.any(it.z <= 0):
        raise InputError("symmetrization needs z > 0")
    n, p = lp.n, lp.p
    entries: dict[tuple[int, int], float] = {}
    A = lp.A
    for r in range(p):
        for j in np.flatnonzero(A[r]):
            entries[(int(j), n + r)] = A[r, j]
    for j in range(n):
        entries[(j, n + p + j)] = 1.0
        entries[(n + p + j, n + p + j)] = it.x[j] / it.z[j]
    r_p, r_d, r_c = kkt_residuals(lp, it, mu)
    rhs = np.concatenate([r_d, r_p, r_c / it.z])
    return SparseSymMatrix(2 * n + p, entries), rhs


def unsymmetric_kkt(lp: StandardLp, it: PdIterate, mu: float):
    """The original (unsymmetrized) block system as a dense matrix."""
    n, p = lp.n, lp.p
    K = np.zeros((2 * n + p, 2 * n + p))
    K[:n, n:n + p] = lp.A.T
    K[:n, n + p:] = np.eye(n)
    K[n:n + p, :n] = lp.A
    K[n + p:, :n] = np.diag(it.z)
    K[n + p:, n + p:] = np.diag(it.x)
    r_p, r_d, r_c = kkt_residuals(lp, it, mu)
    return K, np.concatenate([r_d, r_p, r_c])


@dataclass
class PdDirection:
    dx: np.ndarray
    dy: np.ndarray
    dz: np.ndarray
    diagnostics: LsqDiagnostics | None = None


def normal_matrix(lp: StandardLp, it: PdIterate) -> np.ndarray:
    """``A Z^-1 X A.T``."""
    AD = lp.A * (it.x / it.z)
    return AD @ lp.A.T


def pd_direction(lp: StandardLp, it: PdIterate, mu: float, mode: str = "explicit-gabp", *,
                 tol: float = DEFAULT_TOL, max_rounds: int | None = None) -> PdDirection:
    if mode not in PD_MODES:
        raise InputError(f"mode must be one of {PD_MODES}")
    x, z = it.x, it.z
    r_p, r_d, r_c = kkt_residuals(lp, it, mu)
    n, p = lp.n, lp.p

    if mode == "full-gabp":
        K, rhs = assemble_symmetric_kkt(lp, it, mu)
        Kd = K.to_dense()
        loaded = np.diag(Kd) == 0.0
        Kd[loaded, loaded] = AUGMENTED_LOADING
        diag = LsqDiagnostics("full", loading=AUGMENTED_LOADING)
        scale = float(np.max(np.abs(rhs))) or 1.0
        sol = gabp_dense_run(Kd, rhs / scale, diag, tol, max_rounds) * scale
        require_converged(diag, "GaBP on the symmetrized Newton system")
        return PdDirection(sol[:n], sol[n:n + p], sol[n + p:], diag)

    d = x / z
    diags: list[LsqDiagnostics] = []

    def reduced(ed, ep, ec):
        rhs = ep - lp.A @ ((ec - x * ed) / z)
        if mode == "dense-oracle":
            dy = spd_solve(normal_matrix(lp, it), rhs)
        else:
            # A Z^-1 X A.T == F.T F with F = sqrt(x/z) A.T
            F = np.sqrt(d)[:, None] * lp.A.T
            dy, diag = gabp_normal_solve(F, rhs, "normal", tol, max_rounds)
            diags.append(diag)
            require_converged(diag, "GaBP on A Z^-1 X A^T")
        dz = ed - lp.A.T @ dy
        dx = (ec - x * dz) / z
        return dx, dy, dz

    dx, dy, dz = reduced(r_d, r_p, r_c)
    # refinement against the unreduced system; the normal matrix grows
    # badly conditioned near the optimum and loses digits in A dx = r_p
    scale = 1.0 + float(np.max(np.abs(lp.b), initial=0.0))
    for _ in range(REFINE_STEPS):
        e_p = r_p - lp.A @ dx
        if np.max(np.abs(e_p), initial=0.0) <= 1e-14 * scale:
            break
        e_d = r_d - lp.A.T @ dy - dz
        e_c = r_c - z * dx - x * dz
        cx, cy, cz = reduced(e_d, e_p, e_c)
        dx, dy, dz = dx + cx, dy + cy, dz + cz
    diag = None
    if diags:
        diag = diags[0]
        diag.rounds = sum(g.rounds for g in diags)
        diag.converged = all(g.converged for g in diags)
        diag.message_updates = sum(g.message_updates for g in diags)
    return PdDirection(dx, dy, dz, diag)


def _fraction_to_boundary(v, dv, tau):
    neg = dv < 0
    if not neg.any():
        return 1.0
    return min(1.0, tau * float(np.min(-v[neg] / dv[neg])))


def _merit(lp, x, y, z, mu):
    r_p = lp.b - lp.A @ x
    r_d = lp.c - lp.A.T @ y - z
    r_c = mu - x * z
    return float(r_p @ r_p + r_d @ r_d + r_c @ r_c)


def _armijo(lp, x, y, z, step, mu, phi, a_p, a_d, cfg):
    gap = float(x @ z)
    s = 1.0
    while s * min(a_p, a_d) >= 1e-14:
        xn = x + s * a_p * step.dx
        zn = z + s * a_d * step.dz
        yn = y + s * a_d * step.dy
        if (float(xn @ zn) <= gap
                and _merit(lp, xn, yn, zn, mu) <= (1 - 2 * cfg.alpha * s * min(a_p, a_d)) * phi):
            return s * a_p, s * a_d
        s *= cfg.beta
    return None, None


@dataclass
class PdResult:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    objective: float
    trace: list[TraceRecord]
    iterations: int
    fallback_steps: int = 0
    # (x, y, z) before each traced step, for the lp actually iterated on
    iterates: list = field(default_factory=list)


def pd_solve(lp: StandardLp, start: PdIterate | None = None,
             cfg: PrimalDualConfig | None = None) -> PdResult:
    """Path following with target ``mu = sigma x.z / n``.

    Starts from ``x = z = 1, y = 0`` unless given a start; infeasibility is
    driven out by the residual terms of the Newton system.  Primal and dual
    step lengths are capped separately by the fraction-to-boundary rule and
    scaled back together until the squared residual norm passes an Armijo
    test and the gap ``x.z`` does not grow.  If no scaling of the unequal
    pair passes, the common length ``min(a_p, a_d)`` is used, for which the
    Newton step is a descent direction of both.

    Free variables get the bounding rows of :func:`bound_split_columns`.
    If the path fails, a dense phase 1 and barrier run decide whether the
    LP is infeasible or unbounded before the error propagates.
    """
    cfg = cfg or PrimalDualConfig()
    lp.require_full_row_rank()
    full = bound_split_columns(lp)
    if full is not lp:
        if start is not None:
            x = extend_point(lp, full, start.x)
            extra = full.n - lp.n
            start = PdIterate(x, np.concatenate([start.y, np.zeros(extra)]),
                              np.concatenate([start.z, np.ones(extra)]))
        res = _classified(full, start, cfg)
        check_split_bound(lp, full, res.x)
        n, p = lp.n, lp.p
        trace = [TraceRecord(r.outer, r.newton, r.x[:n], r.objective, r.mu, r.lambda2, r.step,
                             r.gabp_rounds, r.gabp_converged) for r in res.trace]
        return PdResult(res.x[:n], res.y[:p], res.z[:n], res.objective, trace,
                        res.iterations, res.fallback_steps, res.iterates)
    return _classified(lp, start, cfg)


def _classified(lp: StandardLp, start, cfg: PrimalDualConfig) -> PdResult:
    """Run the path; if it fails, tell infeasible and unbounded LPs apart."""
    try:
        return _pd_path(lp, start, cfg)
    except (LineSearchStalledError, IterationLimitError, UnboundedProblemError) as exc:
        # the infeasible-start method cannot certify either case itself;
        # a dense phase 1 and barrier run decide which one it is
        dense = BarrierConfig(linsolve="dense-oracle")
        x, _ = find_interior_point(lp, dense)
        try:
            barrier_solve(lp, x, dense)
        except UnboundedProblemError:
            raise UnboundedProblemError("primal iterates diverge; the problem is unbounded") from exc
        raise


def _pd_path(lp: StandardLp, start: PdIterate | None, cfg: PrimalDualConfig) -> PdResult:
    n = lp.n
    if start is None:
        start = PdIterate(np.ones(n), np.zeros(lp.p), np.ones(n))
    x, y, z = start.x.copy(), start.y.copy(), start.z.copy()
    trace: list[TraceRecord] = []
    iterates: list[PdIterate] = []
    fallbacks = 0
    for k in range(cfg.max_iter):
        r_p = lp.b - lp.A @ x
        r_d = lp.c - lp.A.T @ y - z
        gap = float(x @ z)
        if max(np.max(np.abs(r_p)), np.max(np.abs(r_d)), gap / n) <= cfg.eps_outer:
            trace.append(TraceRecord(k, 0, x, float(lp.c @ x), gap / n, 0.0, 0.0, 0, True))
            iterates.append(PdIterate(x, y, z))
            return PdResult(x, y, z, float(lp.c @ x), trace, k, fallbacks, iterates)
        mu = cfg.sigma * gap / n
        it = PdIterate(x, y, z)
        rounds, converged = 0, True
        try:
            step = pd_direction(lp, it, mu, cfg.linsolve, tol=cfg.gabp_tol,
                                max_rounds=cfg.gabp_max_rounds)
            if step.diagnostics is not None:
                rounds = step.diagnostics.rounds
        except GabpNotConvergedError as exc:
            if not cfg.fallback:
                raise
            fallbacks += 1
            converged = False
            rounds = exc.diagnostics.rounds if exc.diagnostics is not None else 0
            step = pd_direction(lp, it, mu, "dense-oracle")

        a_p = _fraction_to_boundary(x, step.dx, cfg.tau)
        a_d = _fraction_to_boundary(z, step.dz, cfg.tau)
        phi = _merit(lp, x, y, z, mu)
        s_p, s_d = _armijo(lp, x, y, z, step, mu, phi, a_p, a_d, cfg)
        if s_p is None:
            # unequal lengths need not decrease the merit; a common length does
            a = min(a_p, a_d)
            s_p, s_d = _armijo(lp, x, y, z, step, mu, phi, a, a, cfg)
            if s_p is None:
                raise LineSearchStalledError(f"primal-dual step stalled at iteration {k}")
        xn, yn, zn = x + s_p * step.dx, y + s_d * step.dy, z + s_d * step.dz
        trace.append(TraceRecord(k, 0, x, float(lp.c @ x), mu, phi, s_p, rounds, converged))
        iterates.append(it)
        x, y, z = xn, yn, zn
        if not (np.all(np.isfinite(x)) and np.max(np.abs(x)) < 1e12):
            raise UnboundedProblemError("primal iterates diverge; the problem appears unbounded")
    raise IterationLimitError(f"primal-dual method did not converge in {cfg.max_iter} iterations")
