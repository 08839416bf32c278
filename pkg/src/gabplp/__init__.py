"""Interior-point LP solvers whose Newton steps are solved by Gaussian belief propagation."""

from .barrier import BarrierConfig, affine_scaling_solve, barrier_solve, find_interior_point, newton_direction
from .convergence import analyze, gamma, iteration_bound, spectral_condition
from .gabp import gabp_least_squares, gabp_solve
from .io import build_toy_problem, emit_lp, parse_lp, read_trace, write_trace
from .model import Constraint, LpProblem, SparseSymMatrix, StandardLp, to_standard_form
from .oracle import dense_solve, vertex_enumerate
from .primaldual import PrimalDualConfig, pd_solve

__all__ = [
    "BarrierConfig", "Constraint", "LpProblem", "PrimalDualConfig", "SparseSymMatrix", "StandardLp",
    "affine_scaling_solve", "analyze", "barrier_solve", "build_toy_problem", "dense_solve", "emit_lp",
    "find_interior_point", "gabp_least_squares", "gabp_solve", "gamma", "iteration_bound",
    "newton_direction", "parse_lp", "pd_solve", "read_trace", "spectral_condition", "to_standard_form",
    "vertex_enumerate", "write_trace",
]
