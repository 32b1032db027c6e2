"""Branch-and-bound and exhaustive solvers for mixed Boolean linear programs."""

from .core import SolveOptions, Solution, Status, TooManyBooleans, brute_force_solve, solve, solve_lp
from .simplex import LPResult, UnboundedError, simplex_solve

__all__ = [
    "LPResult",
    "SolveOptions",
    "Solution",
    "Status",
    "TooManyBooleans",
    "UnboundedError",
    "brute_force_solve",
    "simplex_solve",
    "solve",
    "solve_lp",
]
