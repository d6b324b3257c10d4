"""Deterministic branch-and-bound over LP relaxations.

Node selection is best-bound (ties broken by insertion order), branching
picks the most fractional binary (ties broken by lowest variable index),
and children are solved eagerly so the queue always orders true bounds.
A rounding dive (fix every binary to the nearest integer, re-solve the LP)
runs at the root and periodically afterwards to seed incumbents early;
callers may also inject a known-feasible warm incumbent.

Identical inputs produce identical search trees, solutions and node
counts.  The explored node count is bounded by 2^(n_binaries + 1).
"""

from __future__ import annotations

import heapq
import time

import numpy as np

from .problem import (LpProblem, MilpProblem, MilpSolution, SolveStatus,
                      ProblemError, relax)
from .solve import solve_lp

INT_TOL = 1e-6
DEFAULT_GAP_TOL = 1e-4
DIVE_EVERY = 25
# above this many binaries the search routes to the library solver
OWN_MAX_BINARIES = 30


def _check_feasible(lp: LpProblem, binaries: np.ndarray, x: np.ndarray,
                    tol: float = 1e-6) -> bool:
    if x is None or x.shape != (lp.n_vars,):
        return False
    if lp.max_violation(x) > tol:
        return False
    if binaries.size:
        frac = np.abs(x[binaries] - np.round(x[binaries]))
        if frac.max(initial=0.0) > tol:
            return False
    return True


def _gap(incumbent: float, lower: float) -> float:
    if not np.isfinite(incumbent):
        return np.inf
    num = incumbent - lower
    if num <= 0:
        return 0.0
    return num / max(abs(incumbent), 1.0)


def _solve_library_milp(p: MilpProblem, time_limit: float,
                        gap_tol: float) -> MilpSolution:
    """Branch-and-cut via the HiGHS backend for large assemblies."""
    from scipy import sparse
    from scipy.optimize import Bounds, LinearConstraint
    from scipy.optimize import milp as scipy_milp

    t0 = time.monotonic()
    lp = p.lp
    A = sparse.csr_matrix((lp.data, lp.indices, lp.indptr),
                          shape=(lp.n_rows, lp.n_vars))
    lb = np.where(lp.rel == 0, -np.inf, lp.rhs)   # <= rows: no lower
    ub = np.where(lp.rel == 2, np.inf, lp.rhs)    # >= rows: no upper
    integrality = np.zeros(lp.n_vars)
    integrality[p.binaries] = 1
    res = scipy_milp(c=lp.obj,
                     constraints=LinearConstraint(A, lb, ub),
                     integrality=integrality,
                     bounds=Bounds(lp.lo, lp.hi),
                     options={"time_limit": float(max(time_limit, 0.01)),
                              "mip_rel_gap": float(gap_tol),
                              "presolve": True})
    wall = time.monotonic() - t0
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.x is not None:
        x = np.asarray(res.x, dtype=float)
        obj = float(lp.obj @ x)
        gap = float(getattr(res, "mip_gap", 0.0) or 0.0)
        status = SolveStatus.OPTIMAL if res.status == 0 else SolveStatus.TIME_LIMIT
        if _check_feasible(relax(p), p.binaries, x, 1e-5):
            return MilpSolution(status, x, obj, gap, nodes, wall,
                                [(nodes, obj, "library")])
        return MilpSolution(SolveStatus.NUMERICAL, x, obj, gap, nodes, wall, [])
    status = {2: SolveStatus.INFEASIBLE,
              3: SolveStatus.UNBOUNDED,
              1: SolveStatus.TIME_LIMIT}.get(res.status, SolveStatus.NUMERICAL)
    return MilpSolution(status, None, np.inf, np.inf, nodes, wall, [])


def solve_milp(p: MilpProblem, time_limit: float = 600.0,
               gap_tol: float = DEFAULT_GAP_TOL, max_nodes: int | None = None,
               incumbent_x: np.ndarray | None = None,
               lp_method: str = "auto", backend: str = "auto") -> MilpSolution:
    """Minimize a mixed-binary program.

    Returns Optimal when the relative gap closes below gap_tol, Feasible
    when the node budget ran out with an incumbent in hand, TimeLimit when
    the clock ran out (x is None if no incumbent was found), Infeasible or
    Unbounded when the root relaxation proves it.

    ``backend`` picks the search: ``"own"`` is the in-package
    branch-and-bound, ``"library"`` the HiGHS branch-and-cut, ``"auto"``
    routes by binary count.  Both honor the same containers, statuses
    and tolerances and are cross-checked in the test suite.
    """
    p.validate()
    if backend not in ("auto", "own", "library"):
        raise ProblemError(f"unknown backend {backend!r}")
    if backend == "auto":
        backend = "own" if p.binaries.size <= OWN_MAX_BINARIES else "library"
    if backend == "library":
        return _solve_library_milp(p, time_limit, gap_tol)
    t0 = time.monotonic()
    deadline = t0 + max(time_limit, 1e-3)
    root_lp = relax(p)
    binaries = p.binaries

    inc_x = None
    inc_obj = np.inf
    trace: list = []

    def remaining() -> float:
        return deadline - time.monotonic()

    def solve_node(lo, hi):
        return solve_lp(root_lp.with_bounds(lo, hi), method=lp_method,
                        time_limit=max(remaining(), 0.05))

    def consider(x, obj, label, nodes_done, lo, hi):
        """Accept a candidate incumbent, re-solving with binaries pinned
        when the candidate is only integral up to tolerance so stored
        incumbents are exactly feasible."""
        nonlocal inc_x, inc_obj
        if obj >= inc_obj - 1e-12:
            return
        x = np.asarray(x, dtype=float)
        if binaries.size:
            off = np.abs(x[binaries] - np.round(x[binaries])).max(initial=0.0)
            if off > 1e-9:
                dlo = lo.copy()
                dhi = hi.copy()
                vals = np.round(np.clip(x[binaries], 0.0, 1.0))
                vals = np.clip(vals, dlo[binaries], dhi[binaries])
                dlo[binaries] = vals
                dhi[binaries] = vals
                sol = solve_lp(root_lp.with_bounds(dlo, dhi), method=lp_method,
                               time_limit=max(remaining(), 0.05))
                if sol.status is not SolveStatus.OPTIMAL:
                    return
                x, obj = sol.x, sol.objective
                if obj >= inc_obj - 1e-12:
                    return
        if _check_feasible(root_lp, binaries, x, 2e-6):
            inc_x = x.copy()
            if binaries.size:
                inc_x[binaries] = np.round(inc_x[binaries])
            inc_obj = float(root_lp.obj @ inc_x)
            trace.append((nodes_done, inc_obj, label))

    if incumbent_x is not None:
        warm = np.asarray(incumbent_x, dtype=float).copy()
        if binaries.size:
            warm[binaries] = np.round(warm[binaries])
        if _check_feasible(root_lp, binaries, warm, 2e-6):
            inc_x = warm
            inc_obj = float(root_lp.obj @ warm)
            trace.append((0, inc_obj, "warm"))

    def dive(lo, hi, x_frac, nodes_done):
        """Fix all binaries to the rounding of x_frac and re-solve."""
        if binaries.size == 0:
            return
        dlo = lo.copy()
        dhi = hi.copy()
        vals = np.round(np.clip(x_frac[binaries], 0.0, 1.0))
        vals = np.clip(vals, dlo[binaries], dhi[binaries])
        dlo[binaries] = vals
        dhi[binaries] = vals
        sol = solve_lp(root_lp.with_bounds(dlo, dhi), method=lp_method,
                       time_limit=max(remaining(), 0.05))
        if sol.status is SolveStatus.OPTIMAL:
            consider(sol.x, sol.objective, "dive", nodes_done, dlo, dhi)

    nodes = 0
    root = solve_node(root_lp.lo, root_lp.hi)
    nodes += 1
    if root.status is SolveStatus.INFEASIBLE:
        return MilpSolution(SolveStatus.INFEASIBLE, None, np.inf, np.inf,
                            nodes, time.monotonic() - t0, trace)
    if root.status is SolveStatus.UNBOUNDED:
        return MilpSolution(SolveStatus.UNBOUNDED, None, -np.inf, np.inf,
                            nodes, time.monotonic() - t0, trace)
    if root.status is not SolveStatus.OPTIMAL:
        status = (SolveStatus.TIME_LIMIT if inc_x is None
                  else SolveStatus.FEASIBLE)
        return MilpSolution(status, inc_x, inc_obj, np.inf, nodes,
                            time.monotonic() - t0, trace)

    heap: list = []
    seq = 0

    def push(bound, lo, hi, x):
        nonlocal seq
        heapq.heappush(heap, (bound, seq, lo, hi, x))
        seq += 1

    def frac_candidates(x):
        if binaries.size == 0:
            return np.zeros(0, dtype=np.int64)
        f = np.abs(x[binaries] - np.round(x[binaries]))
        return binaries[f > INT_TOL]

    cand = frac_candidates(root.x)
    if cand.size == 0:
        consider(root.x, root.objective, "root", nodes, root_lp.lo, root_lp.hi)
        if inc_x is None:
            return MilpSolution(SolveStatus.NUMERICAL, None, np.inf, np.inf,
                                nodes, time.monotonic() - t0, trace)
        gap = _gap(inc_obj, root.objective)
        return MilpSolution(SolveStatus.OPTIMAL, inc_x, inc_obj, gap, nodes,
                            time.monotonic() - t0, trace)
    dive(root_lp.lo, root_lp.hi, root.x, nodes)
    push(root.objective, root_lp.lo, root_lp.hi, root.x)

    best_bound = root.objective
    status = SolveStatus.OPTIMAL

    while heap:
        bound, _, lo, hi, x = heapq.heappop(heap)
        best_bound = bound if not heap else min(bound, heap[0][0])
        prune_eps = max(gap_tol * max(abs(inc_obj), 1.0), 1e-9)
        if np.isfinite(inc_obj) and bound >= inc_obj - prune_eps:
            best_bound = inc_obj
            break
        if remaining() <= 0:
            status = SolveStatus.TIME_LIMIT
            break
        if max_nodes is not None and nodes >= max_nodes:
            status = (SolveStatus.FEASIBLE if inc_x is not None
                      else SolveStatus.TIME_LIMIT)
            break

        f = np.abs(x[binaries] - np.round(x[binaries]))
        frac_mask = f > INT_TOL
        scores = np.minimum(x[binaries], 1.0 - x[binaries])
        scores[~frac_mask] = -1.0
        j = int(binaries[np.argmax(scores)])

        for fix in (0.0, 1.0):
            clo = lo.copy()
            chi = hi.copy()
            if fix == 0.0:
                chi[j] = 0.0
            else:
                clo[j] = 1.0
            if clo[j] > chi[j]:
                continue
            if remaining() <= 0:
                status = SolveStatus.TIME_LIMIT
                break
            sol = solve_lp(root_lp.with_bounds(clo, chi), method=lp_method,
                           time_limit=max(remaining(), 0.05))
            nodes += 1
            if sol.status is SolveStatus.INFEASIBLE:
                continue
            if sol.status is not SolveStatus.OPTIMAL:
                status = SolveStatus.TIME_LIMIT
                break
            if np.isfinite(inc_obj) and sol.objective >= inc_obj - prune_eps:
                continue
            child_cand = frac_candidates(sol.x)
            if child_cand.size == 0:
                consider(sol.x, sol.objective, "node", nodes, clo, chi)
            else:
                push(sol.objective, clo, chi, sol.x)
                if nodes % DIVE_EVERY == 0:
                    dive(clo, chi, sol.x, nodes)
        if status is SolveStatus.TIME_LIMIT:
            break

    if not heap and status is SolveStatus.OPTIMAL:
        best_bound = inc_obj if np.isfinite(inc_obj) else best_bound
    gap = _gap(inc_obj, best_bound)

    wall = time.monotonic() - t0
    if inc_x is None:
        final = (SolveStatus.INFEASIBLE
                 if status is SolveStatus.OPTIMAL else SolveStatus.TIME_LIMIT)
        return MilpSolution(final, None, np.inf, np.inf, nodes, wall, trace)
    if status is SolveStatus.OPTIMAL or gap <= gap_tol:
        final = SolveStatus.OPTIMAL
    else:
        final = status
    sol = MilpSolution(final, inc_x, inc_obj, gap, nodes, wall, trace)
    if root_lp.max_violation(inc_x) > 5e-6:
        raise ProblemError("incumbent fails feasibility check")
    return sol
