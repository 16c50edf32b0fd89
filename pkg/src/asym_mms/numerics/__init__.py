"""Solver plumbing: dense simplex LP and certified convex minimization."""

from .convex import (
    ActiveSetResult,
    Certificate,
    ConvexProblem,
    accelerated_gradient,
    minimize_separable,
    prox_solve,
)
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, LpResult, lp_solve

__all__ = [
    "ActiveSetResult", "Certificate", "ConvexProblem", "accelerated_gradient",
    "minimize_separable", "prox_solve", "INFEASIBLE", "OPTIMAL", "UNBOUNDED",
    "LpProblem", "LpResult", "lp_solve",
]
