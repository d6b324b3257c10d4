"""Primal simplex for linear programs with general variable bounds.

Dense two-phase implementation on the equality form

    min c @ x   s.t.   A @ x = b,   lo <= x <= hi,

where the caller has already appended slack columns for inequality rows.
Phase 1 drives signed artificial columns to zero; phase 2 optimizes the
true objective with the artificials pinned at zero.  Nonbasic variables
rest at a finite bound (free variables rest at zero), and a bound flip is
taken whenever the entering variable reaches its opposite bound before any
basic variable blocks.

Pricing is Dantzig (most negative reduced cost) with a switch to Bland's
rule after 1000 degenerate pivots, which guarantees termination.  The
basis inverse is maintained by product-form updates and refactorized
periodically for numerical hygiene.
"""

from __future__ import annotations

import numpy as np

from .problem import SolveStatus

_AT_LO = 0
_AT_UP = 1
_FREE = 2
_BASIC = 3

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-10
DEGEN_TOL = 1e-10
BLAND_AFTER = 1000
REFACTOR_EVERY = 300


class _Numerical(Exception):
    pass


def _refactor(A, basis, b, x, stat):
    """Recompute the basis inverse and basic values from scratch."""
    B = A[:, basis]
    try:
        B_inv = np.linalg.inv(B)
    except np.linalg.LinAlgError:
        raise _Numerical("singular basis") from None
    nonbasic_mask = stat != _BASIC
    r = b - A[:, nonbasic_mask] @ x[nonbasic_mask]
    x[basis] = B_inv @ r
    return B_inv


def _phase(cost, A, b, lo, hi, x, stat, basis, B_inv, can_enter,
           max_iter, nit0=0, bland_after=BLAND_AFTER):
    """Run simplex iterations until optimality for the given cost vector.

    Mutates x, stat, basis, B_inv in place.  Returns (status, nit) where
    status is OPTIMAL / UNBOUNDED / NUMERICAL (iteration cap maps to
    NUMERICAL: with Bland's rule it should be unreachable).
    """
    m, n_total = A.shape
    nit = nit0
    degenerate = 0
    bland = False
    span = hi - lo
    movable = can_enter & (span > PIVOT_TOL)
    since_refactor = 0

    while nit - nit0 < max_iter:
        cB = cost[basis]
        y = cB @ B_inv
        d = cost - y @ A
        d[basis] = 0.0

        viol = np.zeros(n_total)
        sel = movable & (stat == _AT_LO)
        viol[sel] = -d[sel]
        sel = movable & (stat == _AT_UP)
        viol[sel] = d[sel]
        sel = movable & (stat == _FREE)
        viol[sel] = np.abs(d[sel])
        cand = np.nonzero(viol > OPT_TOL)[0]
        if cand.size == 0:
            return SolveStatus.OPTIMAL, nit
        if bland:
            j = int(cand[0])
        else:
            j = int(cand[np.argmax(viol[cand])])

        if stat[j] == _AT_LO:
            sigma = 1.0
        elif stat[j] == _AT_UP:
            sigma = -1.0
        else:
            sigma = 1.0 if d[j] < 0 else -1.0

        u = B_inv @ A[:, j]
        w = sigma * u

        xB = x[basis]
        theta = np.full(m, np.inf)
        pos = w > PIVOT_TOL
        neg = w < -PIVOT_TOL
        theta[pos] = (xB[pos] - lo[basis[pos]]) / w[pos]
        theta[neg] = (xB[neg] - hi[basis[neg]]) / w[neg]
        np.clip(theta, 0.0, None, out=theta)

        theta_flip = span[j] if np.isfinite(span[j]) else np.inf
        if theta.size:
            t_min = theta.min()
        else:
            t_min = np.inf
        theta_star = min(t_min, theta_flip)

        if not np.isfinite(theta_star):
            return SolveStatus.UNBOUNDED, nit

        if theta_star <= DEGEN_TOL:
            degenerate += 1
            if degenerate > bland_after:
                bland = True

        if theta_flip < t_min - 1e-12:
            # entering variable runs to its opposite bound; basis unchanged
            x[basis] = xB - w * theta_star
            if stat[j] == _AT_LO:
                x[j] = hi[j]
                stat[j] = _AT_UP
            else:
                x[j] = lo[j]
                stat[j] = _AT_LO
        else:
            ties = np.nonzero(theta <= t_min + 1e-12)[0]
            if bland:
                k = int(ties[np.argmin(basis[ties])])
            else:
                k = int(ties[np.argmax(np.abs(w[ties]))])
            if abs(u[k]) < PIVOT_TOL:
                raise _Numerical("pivot element vanished")
            x[basis] = xB - w * theta_star
            x[j] = x[j] + sigma * theta_star
            leaving = basis[k]
            if w[k] > 0:
                x[leaving] = lo[leaving]
                stat[leaving] = _AT_LO
            else:
                x[leaving] = hi[leaving]
                stat[leaving] = _AT_UP
            basis[k] = j
            stat[j] = _BASIC
            pivot_row = B_inv[k] / u[k]
            B_inv -= np.outer(u, pivot_row)
            B_inv[k] = pivot_row

        nit += 1
        since_refactor += 1
        if since_refactor >= REFACTOR_EVERY:
            B_inv[:] = _refactor(A, basis, b, x, stat)
            since_refactor = 0

    return SolveStatus.NUMERICAL, nit


def solve_bounded_simplex(c, A, b, lo, hi, max_iter=None):
    """Minimize c @ x subject to A @ x = b and lo <= x <= hi.

    Returns (status, x, objective, duals, iterations); duals are the
    equality multipliers y = c_B @ B^-1 of the final basis.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if max_iter is None:
        max_iter = max(20000, 60 * (m + n))

    # nonbasic start: every structural variable at a finite bound
    lo_f = np.isfinite(lo)
    hi_f = np.isfinite(hi)
    x0 = np.where(lo_f, lo, np.where(hi_f, hi, 0.0))
    stat0 = np.where(lo_f, _AT_LO, np.where(hi_f, _AT_UP, _FREE)).astype(np.int8)

    r = b - A @ x0
    sgn = np.where(r >= 0, 1.0, -1.0)
    A_full = np.hstack([A, np.diag(sgn)])
    lo_full = np.concatenate([lo, np.zeros(m)])
    hi_full = np.concatenate([hi, np.full(m, np.inf)])
    x = np.concatenate([x0, np.abs(r)])
    stat = np.concatenate([stat0, np.full(m, _BASIC, dtype=np.int8)])
    basis = np.arange(n, n + m)
    B_inv = np.diag(sgn).copy()   # inverse of the +-1 artificial basis

    can_enter = np.zeros(n + m, dtype=bool)
    can_enter[:n] = True

    phase1_cost = np.concatenate([np.zeros(n), np.ones(m)])
    try:
        status, nit = _phase(phase1_cost, A_full, b, lo_full, hi_full,
                             x, stat, basis, B_inv, can_enter, max_iter)
    except _Numerical:
        return SolveStatus.NUMERICAL, None, np.inf, None, 0
    if status is SolveStatus.UNBOUNDED:
        # phase-1 objective is bounded below by zero; reaching here means
        # numerical trouble rather than a genuine ray
        return SolveStatus.NUMERICAL, None, np.inf, None, nit
    if status is not SolveStatus.OPTIMAL:
        return status, None, np.inf, None, nit

    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    infeas = float(phase1_cost @ x)
    if infeas > FEAS_TOL * scale:
        return SolveStatus.INFEASIBLE, None, np.inf, None, nit

    # pin artificials at zero and optimize the true objective
    hi_full[n:] = 0.0
    phase2_cost = np.concatenate([c, np.zeros(m)])
    try:
        B_inv[:] = _refactor(A_full, basis, b, x, stat)
        status, nit = _phase(phase2_cost, A_full, b, lo_full, hi_full,
                             x, stat, basis, B_inv, can_enter, max_iter, nit0=nit)
    except _Numerical:
        return SolveStatus.NUMERICAL, None, np.inf, None, nit
    if status is not SolveStatus.OPTIMAL:
        return status, None, np.inf, None, nit

    try:
        B_inv[:] = _refactor(A_full, basis, b, x, stat)
    except _Numerical:
        pass
    y = phase2_cost[basis] @ B_inv
    x_out = x[:n].copy()
    np.clip(x_out, lo, hi, out=x_out)
    return SolveStatus.OPTIMAL, x_out, float(c @ x_out), y, nit
