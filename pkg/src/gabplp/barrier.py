"""Primal log-barrier and affine-scaling solvers with GaBP Newton steps.

For fixed ``mu`` the barrier subproblem is

    min  c @ x - mu * sum(log x)   s.t.  A @ x == b.

With ``X = diag(x)``, ``F = X A.T`` (n x p) and ``g = X c - mu * 1`` the
Newton direction comes from the least-squares problem
``y = argmin ||F y - g||``, whose normal equations are
``A X^2 A.T y = A X^2 c - mu * A x``.  The direction is then
``dx = -(1/mu) X (g - F y)``, i.e. ``x + (1/mu) X^2 (A.T y - c)``.

After ``dx`` is formed one weighted projection ``dx += X F w`` with
``(F.T F) w = (b - A x) - A dx`` restores ``A dx == b - A x`` exactly; it
doubles as one step of iterative refinement for an inexact ``y``.

Affine scaling is the ``mu = 0`` member of the family: ``g = X c`` and
``dx = -X^2 (c - A.T y)``, followed by a fixed fraction of the step to the
boundary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptyInteriorError, GabpNotConvergedError, InfeasibleProblemError, SingularMatrixError, InputError,
                     IterationLimitError, LineSearchStalledError, UnboundedProblemError)
from .gabp import gabp_least_squares, gabp_normal_solve, require_converged
from .model import Provenance, StandardLp, TraceRecord, as_vector, split_pairs
from .oracle import dense_least_squares, spd_solve

log = logging.getLogger(__name__)

LINSOLVE_MODES = ("gabp-normal", "gabp-augmented", "dense-oracle")
_GABP_MODE = {"gabp-normal": "normal", "gabp-augmented": "augmented"}


@dataclass
class BarrierConfig:
    mu0: float = 1.0
    sigma: float = 0.1
    eps_outer: float = 1e-8
    eps_newton: float = 1e-9
    alpha: float = 0.25
    beta: float = 0.5
    tau: float = 0.99
    gabp_tol: float = 1e-10
    gabp_max_rounds: int | None = None
    linsolve: str = "gabp-normal"
    # on GaBP failure redo the step densely and flag it in the trace
    fallback: bool = True
    max_newton: int = 100
    max_affine: int = 500

    def __post_init__(self):
        if not self.mu0 > 0:
            raise InputError("mu0 must be positive")
        if not 0 < self.sigma < 1:
            raise InputError("sigma must lie in (0, 1)")
        if not (self.eps_outer > 0 and self.eps_newton > 0 and self.gabp_tol > 0):
            raise InputError("tolerances must be positive")
        if not 0 < self.alpha < 0.5:
            raise InputError("alpha must lie in (0, 0.5)")
        if not 0 < self.beta < 1:
            raise InputError("beta must lie in (0, 1)")
        if not 0 < self.tau < 1:
            raise InputError("tau must lie in (0, 1)")
        if self.linsolve not in LINSOLVE_MODES:
            raise InputError(f"linsolve must be one of {LINSOLVE_MODES}")


@dataclass
class SolveStats:
    """GaBP work spent on one direction (summed over its linear solves)."""

    rounds: int = 0
    converged: bool = True
    solves: int = 0
    per_solve: list = field(default_factory=list)

    def add(self, diag):
        if diag is None:
            return
        self.rounds += diag.rounds
        self.converged = self.converged and diag.ok
        self.solves += 1
        self.per_solve.append(diag)


def least_squares(F, g, mode: str, tol: float = 1e-10, max_rounds=None, stats: SolveStats | None = None):
    if mode == "dense-oracle":
        return dense_least_squares(F, g)
    y, diag = gabp_least_squares(F, g, _GABP_MODE[mode], tol, max_rounds)
    if stats is not None:
        stats.add(diag)
    require_converged(diag, "GaBP least squares")
    return y


def normal_solve(F, rhs, mode: str, tol: float = 1e-10, max_rounds=None, stats: SolveStats | None = None):
    if mode == "dense-oracle":
        return spd_solve(F.T @ F, rhs)
    w, diag = gabp_normal_solve(F, rhs, _GABP_MODE[mode], tol, max_rounds)
    if stats is not None:
        stats.add(diag)
    require_converged(diag, "GaBP normal solve")
    return w


@dataclass
class NewtonStep:
    dx: np.ndarray
    y: np.ndarray
    lambda2: float
    stats: SolveStats


def shift_vector(lp: StandardLp, x, mu: float) -> np.ndarray:
    """``g = X c - mu * 1``, the target of the Newton least-squares problem."""
    return x * lp.c - mu


def newton_direction(lp: StandardLp, x, mu: float, mode: str = "gabp-normal", *,
                     tol: float = 1e-10, max_rounds: int | None = None,
                     check_feasible: bool = True) -> NewtonStep:
    x = as_vector(x, "x")
    if x.shape != (lp.n,):
        raise InputError("x has the wrong length")
    if np.any(x <= 0):
        raise InputError("x must be strictly positive")
    if mu < 0:
        raise InputError("mu must be nonnegative")
    r_p = lp.b - lp.A @ x
    if check_feasible and np.max(np.abs(r_p), initial=0.0) > 1e-8 * (1 + np.max(np.abs(lp.b))):
        raise InputError("x does not satisfy A x = b")

    stats = SolveStats()
    F = x[:, None] * lp.A.T
    g = shift_vector(lp, x, mu)
    y = least_squares(F, g, mode, tol, max_rounds, stats)
    resid = g - F @ y
    dx = -x * resid / mu if mu > 0 else -x * resid

    # affine directions get rescaled afterwards, so they only target A dx = 0
    s = (r_p if mu > 0 else 0.0) - lp.A @ dx
    if np.any(s != 0):
        w = normal_solve(F, s, mode, tol, max_rounds, stats)
        dx = dx + x * (F @ w)
    grad = lp.c - mu / x
    lambda2 = max(-float(grad @ dx), 0.0)
    return NewtonStep(dx, y, lambda2, stats)


def barrier_value(lp: StandardLp, x, mu: float) -> float:
    if np.any(x <= 0):
        return math.inf
    return float(lp.c @ x) - mu * float(np.sum(np.log(x)))


def max_step(x, dx) -> float:
    neg = dx < 0
    if not neg.any():
        return math.inf
    return float(np.min(-x[neg] / dx[neg]))


def backtracking(f, x, dx, slope: float, alpha: float, beta: float, t0: float = 1.0,
                 t_min: float = 1e-16) -> float:
    """Shrink ``t`` by ``beta`` until ``f(x + t dx) <= f(x) + alpha t slope``."""
    fx = f(x)
    t = t0
    while True:
        ft = f(x + t * dx)
        if np.isfinite(ft) and ft <= fx + alpha * t * slope:
            return t
        t *= beta
        if t < t_min:
            raise LineSearchStalledError("backtracking line search found no admissible step")


def line_search(lp: StandardLp, x, dx, mu: float, alpha: float = 0.25, beta: float = 0.5,
                tau: float = 0.99) -> float:
    x = np.asarray(x, dtype=float)
    dx = np.asarray(dx, dtype=float)
    if not np.any(dx):
        return 0.0
    t0 = min(1.0, tau * max_step(x, dx))
    slope = float((lp.c - mu / x) @ dx)
    return backtracking(lambda v: barrier_value(lp, v, mu), x, dx, slope, alpha, beta, t0)


@dataclass
class SolveResult:
    x: np.ndarray
    objective: float
    trace: list[TraceRecord]
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    fallback_steps: int = 0


class _Stepper:
    """Direction oracle with the configured mode and optional dense fallback."""

    def __init__(self, lp: StandardLp, cfg: BarrierConfig):
        self.lp = lp
        self.cfg = cfg
        self.fallbacks = 0

    def __call__(self, x, mu):
        cfg = self.cfg
        try:
            return newton_direction(self.lp, x, mu, cfg.linsolve, tol=cfg.gabp_tol,
                                    max_rounds=cfg.gabp_max_rounds, check_feasible=False)
        except GabpNotConvergedError as exc:
            if not cfg.fallback:
                raise
            log.debug("GaBP failed (%s); dense fallback", exc)
            self.fallbacks += 1
            step = newton_direction(self.lp, x, mu, "dense-oracle", check_feasible=False)
            failed = SolveStats(converged=False)
            if exc.diagnostics is not None:
                failed.rounds = exc.diagnostics.rounds
                failed.per_solve.append(exc.diagnostics)
            step.stats = failed
            return step


SPLIT_BOUND = 1e6


def bound_split_columns(lp: StandardLp, bound: float | None = None) -> StandardLp:
    """Add ``x+ + x- + s = M`` for every split free variable.

    Splitting ``x = x+ - x-`` leaves the direction ``x+ = x- -> inf`` free
    of cost, so the barrier subproblem has no minimizer and the dual has no
    interior.  The extra rows make both well posed and do not change the
    LP optimum as long as ``|x| < M`` there.  ``M`` defaults to
    ``SPLIT_BOUND * (1 + max|b|)``.  Returns ``lp`` itself when nothing is
    split; otherwise the new columns come last, so truncating a solution to
    ``lp.n`` entries recovers the original columns.
    """
    pairs = split_pairs(lp.provenance)
    if not pairs:
        return lp
    if bound is None:
        bound = SPLIT_BOUND * (1.0 + float(np.max(np.abs(lp.b), initial=0.0)))
    k = len(pairs)
    extra = np.zeros((k, lp.n + k))
    for r, (i, j) in enumerate(pairs):
        extra[r, [i, j, lp.n + r]] = 1.0
    A = np.vstack([np.hstack([lp.A, np.zeros((lp.p, k))]), extra])
    cols = lp.provenance.columns + tuple(("bound", r, 1.0) for r in range(k))
    return StandardLp(A, np.concatenate([lp.b, np.full(k, bound)]), np.concatenate([lp.c, np.zeros(k)]),
                      Provenance(cols, lp.provenance.num_original), lp.objective_sign, lp.offset)


def extend_point(lp: StandardLp, wrapped: StandardLp, x) -> np.ndarray:
    """Extend a point of ``lp`` with the slacks of :func:`bound_split_columns`."""
    x = as_vector(x, "x")
    if wrapped is lp:
        return x
    extra = wrapped.b[lp.p:] - wrapped.A[lp.p:, :lp.n] @ x
    return np.concatenate([x, extra])


def check_split_bound(lp: StandardLp, wrapped: StandardLp, x):
    """Raise when a split variable ran into the artificial bound ``M``."""
    if wrapped is lp:
        return
    M = wrapped.b[lp.p:]
    for (i, j), m in zip(split_pairs(lp.provenance), M):
        if abs(x[i] - x[j]) >= 0.5 * m:
            raise UnboundedProblemError("a free variable runs off to infinity; the problem is unbounded")


def _truncate(res: "SolveResult", lp: StandardLp, wrapped: StandardLp) -> "SolveResult":
    if wrapped is lp:
        return res
    check_split_bound(lp, wrapped, res.x)
    n = lp.n
    trace = [TraceRecord(r.outer, r.newton, r.x[:n], r.objective, r.mu, r.lambda2, r.step,
                         r.gabp_rounds, r.gabp_converged) for r in res.trace]
    return SolveResult(res.x[:n], res.objective, trace,
                       y=None if res.y is None else res.y[:lp.p],
                       z=None if res.z is None else res.z[:n], fallback_steps=res.fallback_steps)


def _check_start(lp: StandardLp, x0):
    x = as_vector(x0, "x0")
    if x.shape != (lp.n,):
        raise InputError(f"x0 has length {x.size}, problem has {lp.n} variables")
    if np.any(x <= 0):
        raise InputError("x0 must be strictly positive")
    if np.max(np.abs(lp.A @ x - lp.b), initial=0.0) > 1e-8 * (1 + np.max(np.abs(lp.b))):
        raise InputError("x0 does not satisfy A x = b")
    return x


def _guard_bounded(x):
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > 1e12:
        raise UnboundedProblemError("iterates diverge; the problem appears unbounded")


def _barrier_path(lp: StandardLp, x, cfg: BarrierConfig, stepper: _Stepper,
                  trace: list, stop_after_stage=None):
    mu = cfg.mu0
    outer = 0
    while True:
        for k in range(cfg.max_newton):
            step = stepper(x, mu)
            obj = float(lp.c @ x)
            if step.lambda2 / 2 <= cfg.eps_newton:
                trace.append(TraceRecord(outer, k, x, obj, mu, step.lambda2, 0.0,
                                         step.stats.rounds, step.stats.converged))
                break
            t = line_search(lp, x, step.dx, mu, cfg.alpha, cfg.beta, cfg.tau)
            trace.append(TraceRecord(outer, k, x, obj, mu, step.lambda2, t,
                                     step.stats.rounds, step.stats.converged))
            x = x + t * step.dx
            _guard_bounded(x)
        else:
            raise IterationLimitError(f"Newton iterations did not converge at mu={mu:.3g}")
        if stop_after_stage is not None and stop_after_stage(x, mu):
            return x, step.y
        if lp.n * mu <= cfg.eps_outer:
            return x, step.y
        mu *= cfg.sigma
        outer += 1


def _project(lp: StandardLp, x) -> np.ndarray:
    """Weighted projection onto ``A x = b``: ``x + X^2 A.T (A X^2 A.T)^-1 r``."""
    r = lp.b - lp.A @ x
    AX = lp.A * x
    w = spd_solve(AX @ AX.T, r)
    return x + x * (AX.T @ w)


def find_interior_point(lp: StandardLp, cfg: BarrierConfig | None = None):
    """Phase 1: a strictly positive ``x`` with ``A x = b``.

    Starting from ``x = 1``, each row with residual ``r_i = b_i - A_i 1``
    gets an artificial column ``r_i e_i`` (start value 1).  The phase-1
    problem minimizes the sum of artificials with the same barrier
    machinery and stops once projecting ``x`` onto ``A x = b`` keeps it
    strictly positive.  Returns ``(x, trace)``.
    """
    cfg = cfg or BarrierConfig()
    lp.require_full_row_rank()
    x = np.ones(lp.n)
    r = lp.b - lp.A @ x
    scale = 1.0 + float(np.max(np.abs(lp.b)))
    rows = np.flatnonzero(np.abs(r) > 1e-14 * scale)
    trace: list[TraceRecord] = []
    if rows.size == 0:
        return x, trace
    k = rows.size
    R = np.zeros((lp.p, k))
    R[rows, np.arange(k)] = r[rows]
    phase1 = StandardLp(np.hstack([lp.A, R]), lp.b, np.concatenate([np.zeros(lp.n), np.ones(k)]))
    found = {}

    def projected_ok(xa, mu):
        try:
            xp = _project(lp, xa[:lp.n])
        except SingularMatrixError:
            return False
        if np.all(xp > 0) and np.min(xp) >= 1e-3 * np.min(xa[:lp.n]):
            found["x"] = xp
            return True
        return False

    xa, _ = _barrier_path(phase1, np.ones(lp.n + k), cfg, _Stepper(phase1, cfg), trace, projected_ok)
    if "x" in found:
        return found["x"], trace
    if float(np.sum(xa[lp.n:])) > 1e-7:
        raise InfeasibleProblemError("phase 1 optimum is positive; the problem is infeasible")
    raise EmptyInteriorError("feasible set has no strictly positive point")


def barrier_solve(lp: StandardLp, x0=None, cfg: BarrierConfig | None = None) -> SolveResult:
    """Log-barrier interior-point method.

    For ``mu = mu0, sigma mu0, ...`` Newton iterations run until
    ``lambda^2 / 2 <= eps_newton``; the loop ends once ``n mu <= eps_outer``.
    Every computed direction is appended to the trace.
    """
    cfg = cfg or BarrierConfig()
    lp.require_full_row_rank()
    full = bound_split_columns(lp)
    if x0 is None:
        x, _ = find_interior_point(full, cfg)
    else:
        x = _check_start(full, extend_point(lp, full, _check_start(lp, x0)))
    stepper = _Stepper(full, cfg)
    trace: list[TraceRecord] = []
    x, y = _barrier_path(full, x, cfg, stepper, trace)
    res = SolveResult(x, float(full.c @ x), trace, y=y, z=full.c - full.A.T @ y,
                      fallback_steps=stepper.fallbacks)
    return _truncate(res, lp, full)


def affine_scaling_solve(lp: StandardLp, x0, cfg: BarrierConfig | None = None) -> SolveResult:
    """Primal affine scaling from a strictly feasible ``x0``.

    Each step moves ``tau`` of the way to the boundary along
    ``-X^2 (c - A.T y)``.  The trace direction is normalized to unit length
    in the scaled metric ``||X^-1 dx|| = 1`` so ``step`` is comparable
    across iterations.  Stops when the scaled reduced cost ``||X z||`` with
    ``z = c - A.T y`` falls below ``eps_outer`` (relative to the objective),
    or when ``z`` is dual feasible with gap ``x @ z`` below it.
    """
    cfg = cfg or BarrierConfig()
    lp.require_full_row_rank()
    full = bound_split_columns(lp)
    x = _check_start(full, extend_point(lp, full, _check_start(lp, x0)))
    res = _affine_path(full, x, cfg)
    return _truncate(res, lp, full)


def _affine_path(lp: StandardLp, x, cfg: BarrierConfig) -> SolveResult:
    stepper = _Stepper(lp, cfg)
    trace: list[TraceRecord] = []
    y = np.zeros(lp.p)
    for k in range(cfg.max_affine):
        step = stepper(x, 0.0)
        y = step.y
        z = lp.c - lp.A.T @ y
        obj = float(lp.c @ x)
        gap = float(x @ z)
        tol = cfg.eps_outer * (1.0 + abs(obj))
        norm = float(np.linalg.norm(step.dx / x))
        scaled = math.sqrt(step.lambda2)
        done = norm <= 1e-14 or scaled <= tol or (gap <= tol and np.min(z) >= -tol)
        if done:
            trace.append(TraceRecord(0, k, x, obj, 0.0, step.lambda2, 0.0,
                                     step.stats.rounds, step.stats.converged))
            break
        d = step.dx / norm
        t_max = max_step(x, d)
        if math.isinf(t_max):
            if float(lp.c @ d) < 0:
                raise UnboundedProblemError("affine-scaling direction is an unbounded ray")
            trace.append(TraceRecord(0, k, x, obj, 0.0, step.lambda2, 0.0,
                                     step.stats.rounds, step.stats.converged))
            break
        t = cfg.tau * t_max
        trace.append(TraceRecord(0, k, x, obj, 0.0, step.lambda2, t,
                                 step.stats.rounds, step.stats.converged))
        x = x + t * d
        _guard_bounded(x)
    else:
        raise IterationLimitError(f"affine scaling did not converge in {cfg.max_affine} steps")
    return SolveResult(x, float(lp.c @ x), trace, y=y, z=lp.c - lp.A.T @ y,
                       fallback_steps=stepper.fallbacks)
