"""Linear and mixed-binary programming kernel.

Sparse row-major problem containers, a dense bounded-variable primal
simplex for small instances, a HiGHS-backed path for large ones, and a
best-bound branch-and-bound driver for binary variables.
"""

from .problem import (
    REL_EQ,
    REL_GE,
    REL_LE,
    LpBuilder,
    LpProblem,
    LpSolution,
    MilpProblem,
    MilpSolution,
    ProblemError,
    SolveStatus,
    SolveTimeout,
    relax,
    write_lp,
)
from .branch_bound import solve_milp
from .solve import choose_method, solve_lp

__all__ = [
    "REL_EQ",
    "REL_GE",
    "REL_LE",
    "LpBuilder",
    "LpProblem",
    "LpSolution",
    "MilpProblem",
    "MilpSolution",
    "ProblemError",
    "SolveStatus",
    "SolveTimeout",
    "choose_method",
    "relax",
    "solve_lp",
    "solve_milp",
    "write_lp",
]
