"""LP solving front end.

solve_lp validates the problem and dispatches to one of two backends:

* "simplex": the package's own dense bounded-variable primal simplex,
  exact duals from the final basis.  Default for problems small enough
  that a dense basis is cheap.
* "highs": scipy.optimize.linprog with the HiGHS dual simplex, used for
  the large scheduling assemblies.  Duals come from HiGHS marginals with
  signs normalized to the same convention as the simplex backend, so
  obj == duals @ rhs + reduced_costs @ active_bounds either way.

Both backends are deterministic for a fixed problem.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .problem import (LpProblem, LpSolution, SolveStatus,
                      REL_LE, REL_EQ, REL_GE)
from . import simplex as _sx

# beyond these sizes the dense simplex basis gets expensive; hand off to HiGHS
SIMPLEX_MAX_ROWS = 400
SIMPLEX_MAX_VARS = 900

_HIGHS_OPTS = {
    "presolve": True,
    "primal_feasibility_tolerance": 1e-9,
    "dual_feasibility_tolerance": 1e-9,
}


def choose_method(p: LpProblem, method: str = "auto") -> str:
    if method not in ("auto", "simplex", "highs"):
        raise ValueError(f"unknown LP method {method!r}")
    if method != "auto":
        return method
    if p.n_rows <= SIMPLEX_MAX_ROWS and p.n_vars <= SIMPLEX_MAX_VARS:
        return "simplex"
    return "highs"


def solve_lp(p: LpProblem, method: str = "auto",
             time_limit: float | None = None) -> LpSolution:
    """Solve a linear program.  Structural defects raise ProblemError;
    infeasibility and unboundedness are reported through the status."""
    p.validate()
    picked = choose_method(p, method)
    if picked == "simplex":
        return _solve_simplex(p)
    return _solve_highs(p, time_limit)


def _solve_simplex(p: LpProblem) -> LpSolution:
    m, n = p.n_rows, p.n_vars
    A = np.zeros((m, n + m))
    for i in range(m):
        cols, vals = p.row(i)
        A[i, cols] = vals
    A[np.arange(m), n + np.arange(m)] = 1.0
    slack_lo = np.empty(m)
    slack_hi = np.empty(m)
    for i, r in enumerate(p.rel):
        if r == REL_LE:
            slack_lo[i], slack_hi[i] = 0.0, np.inf
        elif r == REL_GE:
            slack_lo[i], slack_hi[i] = -np.inf, 0.0
        else:
            slack_lo[i], slack_hi[i] = 0.0, 0.0
    c = np.concatenate([p.obj, np.zeros(m)])
    lo = np.concatenate([p.lo, slack_lo])
    hi = np.concatenate([p.hi, slack_hi])
    status, x, obj, y, nit = _sx.solve_bounded_simplex(c, A, p.rhs.copy(), lo, hi)
    if status is not SolveStatus.OPTIMAL:
        return LpSolution(status=status, x=None, objective=np.inf,
                          duals=None, iterations=nit, method="simplex")
    return LpSolution(status=SolveStatus.OPTIMAL, x=x[:n] if x is not None else None,
                      objective=obj, duals=y, iterations=nit, method="simplex")


_SCIPY_STATUS = {
    0: SolveStatus.OPTIMAL,
    1: SolveStatus.TIME_LIMIT,   # iteration/time limit
    2: SolveStatus.INFEASIBLE,
    3: SolveStatus.UNBOUNDED,
    4: SolveStatus.NUMERICAL,
}


def _solve_highs(p: LpProblem, time_limit: float | None) -> LpSolution:
    m, n = p.n_rows, p.n_vars
    A = sparse.csr_matrix((p.data, p.indices, p.indptr), shape=(m, n))
    le_mask = p.rel == REL_LE
    ge_mask = p.rel == REL_GE
    eq_mask = p.rel == REL_EQ
    ub_mask = le_mask | ge_mask
    sign = np.where(ge_mask, -1.0, 1.0)

    A_ub = None
    b_ub = None
    if ub_mask.any():
        A_ub = sparse.diags(sign[ub_mask]) @ A[ub_mask]
        b_ub = (sign * p.rhs)[ub_mask]
    A_eq = None
    b_eq = None
    if eq_mask.any():
        A_eq = A[eq_mask]
        b_eq = p.rhs[eq_mask]

    bounds = np.column_stack([p.lo, p.hi])
    options = dict(_HIGHS_OPTS)
    if time_limit is not None:
        options["time_limit"] = max(0.01, float(time_limit))
    res = linprog(p.obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs", options=options)
    status = _SCIPY_STATUS.get(res.status, SolveStatus.NUMERICAL)
    if status is not SolveStatus.OPTIMAL or res.x is None:
        return LpSolution(status=status, x=None, objective=np.inf,
                          duals=None, iterations=int(getattr(res, "nit", 0) or 0),
                          method="highs")
    # marginals are d(obj)/d(rhs); mapping back through the +-1 row sign
    # gives sensitivities w.r.t. the original rhs, which is exactly the
    # convention of the simplex backend (y = c_B @ B^-1), so the duality
    # identity obj == y @ rhs + reduced costs at active bounds holds here too
    duals = np.zeros(m)
    if A_ub is not None and res.ineqlin is not None:
        duals[ub_mask] = sign[ub_mask] * res.ineqlin.marginals
    if A_eq is not None and res.eqlin is not None:
        duals[eq_mask] = res.eqlin.marginals
    return LpSolution(status=SolveStatus.OPTIMAL, x=res.x,
                      objective=float(res.fun), duals=duals,
                      iterations=int(getattr(res, "nit", 0) or 0), method="highs")
