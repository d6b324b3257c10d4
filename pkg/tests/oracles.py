"""Independent reference implementations used to check the package.

Everything here is deliberately written the slow way: dense matrices,
scalar loops, exhaustive enumeration over binary assignments, and the
scipy simplex-free interior solver as the only LP dependency.  Nothing
imports from the package's solver or assembly code paths except the
problem containers being checked.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog


def lp_to_dense(lp):
    """Dense (A, rel, rhs) view of a problem's rows."""
    A = np.zeros((lp.n_rows, lp.n_vars))
    for i in range(lp.n_rows):
        cols, vals = lp.row(i)
        A[i, cols] = vals
    return A, np.asarray(lp.rel), np.asarray(lp.rhs)


def reference_lp(lp):
    """Solve an LpProblem with scipy.linprog directly.

    Returns (status_str, x, objective) with status in {"optimal",
    "infeasible", "unbounded"}.
    """
    A, rel, rhs = lp_to_dense(lp)
    le = rel == 0
    eq = rel == 1
    ge = rel == 2
    A_ub = np.vstack([A[le], -A[ge]]) if (le.any() or ge.any()) else None
    b_ub = np.concatenate([rhs[le], -rhs[ge]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = rhs[eq] if A_eq is not None else None
    bounds = list(zip(
        [None if v == -np.inf else v for v in lp.lo],
        [None if v == np.inf else v for v in lp.hi]))
    res = linprog(lp.obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if res.status == 0:
        return "optimal", np.asarray(res.x), float(res.fun)
    if res.status == 2:
        return "infeasible", None, np.inf
    if res.status == 3:
        return "unbounded", None, -np.inf
    return "failed", None, np.nan


def enumerate_milp(milp):
    """Exhaustive optimum of a small mixed-binary program.

    Tries every 0/1 assignment of the binaries, solves the continuous
    rest with scipy, and keeps the best.  Returns (status, x, objective).
    """
    lp = milp.lp
    binaries = np.asarray(milp.binaries, dtype=np.int64)
    best = (np.inf, None)
    any_unbounded = False
    for combo in itertools.product((0.0, 1.0), repeat=binaries.size):
        lo = lp.lo.copy()
        hi = lp.hi.copy()
        vals = np.asarray(combo)
        if np.any(vals < lp.lo[binaries] - 1e-12):
            continue
        if np.any(vals > lp.hi[binaries] + 1e-12):
            continue
        lo[binaries] = vals
        hi[binaries] = vals
        status, x, obj = reference_lp(lp.with_bounds(lo, hi))
        if status == "unbounded":
            any_unbounded = True
        elif status == "optimal" and obj < best[0]:
            best = (obj, x)
    if any_unbounded:
        return "unbounded", None, -np.inf
    if best[1] is None:
        return "infeasible", None, np.inf
    return "optimal", best[1], best[0]


def scalar_soc_replay(model, p_chg):
    """State-of-charge trajectories via plain Python loops."""
    th = model.thermal
    dt = model.grid.dt
    out = np.zeros((len(model.fleet), model.grid.n_steps + 1))
    for i, veh in enumerate(model.fleet):
        s = veh.soc_arr
        out[i, 0] = s
        for t in range(model.grid.n_steps):
            if veh.ta <= t < veh.td:
                s = s + th.eta_chg * p_chg[i, t] * dt / veh.capacity_kwh
            out[i, t + 1] = s
    return out


def scalar_temp_replay(model, scen, p_chg, p_heat):
    """Cabin temperature trajectories via plain Python loops."""
    th = model.thermal
    dt = model.grid.dt
    n_veh = len(model.fleet)
    out = np.zeros((n_veh, model.grid.n_steps + 1, scen.n_scen))
    for i, veh in enumerate(model.fleet):
        mc = th.heat_capacity_c * veh.mass_kg
        hA = th.mu_heat * th.loss_coeff_hA
        for w in range(scen.n_scen):
            T = veh.temp_arr
            out[i, 0, w] = T
            for t in range(model.grid.n_steps):
                if veh.ta <= t < veh.td:
                    flow = (-hA * (T - scen.temp_amb[w, t])
                            + th.eta_heat * p_heat[i, t]
                            + (1.0 - th.eta_chg) * p_chg[i, t])
                    T = T + dt * flow / mc
                out[i, t + 1, w] = T
    return out


def dense_station_lp(model, scen, v_fixed):
    """Assemble the station problem directly as dense matrices.

    ``v_fixed[i]`` gives the rule binary values for vehicle ``i`` over
    its interior steps (length window-1).  Solves with scipy and returns
    (status, objective).  Written from the constraint definitions with
    no reuse of the package assembly code.
    """
    th = model.thermal
    g = model.grid
    N, W = g.n_steps, scen.n_scen
    dt = g.dt
    price = model.tariff.price

    # variable order: per vehicle [p_chg, p_heat, soc, slack, T(w-major
    # per boundary)], then p_grid (t-major), then p_pv
    idx = {}
    n = 0
    for i, veh in enumerate(model.fleet):
        L = veh.td - veh.ta
        idx[("chg", i)] = n; n += L
        idx[("heat", i)] = n; n += L
        idx[("soc", i)] = n; n += L + 1
        idx[("slk", i)] = n; n += 1
        idx[("T", i)] = n; n += (L + 1) * W
    idx["pg"] = n; n += N * W
    idx["pv"] = n; n += N * W

    c = np.zeros(n)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    A_ub, b_ub, A_eq, b_eq = [], [], [], []

    def chg(i, t):
        return idx[("chg", i)] + (t - model.fleet[i].ta)

    def heat(i, t):
        return idx[("heat", i)] + (t - model.fleet[i].ta)

    def soc(i, t):
        return idx[("soc", i)] + (t - model.fleet[i].ta)

    def temp(i, t, w):
        return idx[("T", i)] + (t - model.fleet[i].ta) * W + w

    for t in range(N):
        for w in range(W):
            j = idx["pg"] + t * W + w
            c[j] = scen.prob[w] * price[t] * dt
            hi[j] = model.pg_max
            jv = idx["pv"] + t * W + w
            hi[jv] = max(scen.pv_cap[w, t], 0.0)

    for i, veh in enumerate(model.fleet):
        L = veh.td - veh.ta
        c[idx[("slk", i)]] = 1000.0
        hi[idx[("slk", i)]] = 1.0
        for t in range(veh.ta, veh.td):
            hi[chg(i, t)] = veh.p_total_max
            hi[heat(i, t)] = veh.p_total_max
        for t in range(veh.ta, veh.td + 1):
            lo[soc(i, t)] = 0.0
            hi[soc(i, t)] = 1.0
            for w in range(W):
                lo[temp(i, t, w)] = th.T_lo
                hi[temp(i, t, w)] = th.T_hi
        lo[soc(i, veh.ta)] = hi[soc(i, veh.ta)] = veh.soc_arr
        for w in range(W):
            lo[temp(i, veh.ta, w)] = hi[temp(i, veh.ta, w)] = veh.temp_arr

        # arrival-step caps at the known arrival temperature
        cap_c = max(0.0, veh.pc_bar + veh.beta_chg * veh.temp_arr)
        if veh.temp_arr < th.T_set:
            cap_c = min(cap_c, max(0.0, th.mu_chg * veh.temp_arr))
        hi[chg(i, veh.ta)] = min(hi[chg(i, veh.ta)], cap_c)
        hi[heat(i, veh.ta)] = min(
            hi[heat(i, veh.ta)],
            max(0.0, veh.ph_bar + veh.beta_heat * veh.temp_arr))

        mc = th.heat_capacity_c * veh.mass_kg
        hA = th.mu_heat * th.loss_coeff_hA
        for t in range(veh.ta, veh.td):
            row = np.zeros(n)
            row[soc(i, t + 1)] = 1.0
            row[soc(i, t)] = -1.0
            row[chg(i, t)] = -th.eta_chg * dt / veh.capacity_kwh
            A_eq.append(row); b_eq.append(0.0)
            row = np.zeros(n)
            row[chg(i, t)] = 1.0
            row[heat(i, t)] = 1.0
            A_ub.append(row); b_ub.append(veh.p_total_max)
            for w in range(W):
                row = np.zeros(n)
                row[temp(i, t + 1, w)] = mc / dt
                row[temp(i, t, w)] = hA - mc / dt
                row[heat(i, t)] = -th.eta_heat
                row[chg(i, t)] = -(1.0 - th.eta_chg)
                A_eq.append(row); b_eq.append(hA * scen.temp_amb[w, t])
        row = np.zeros(n)
        row[soc(i, veh.td)] = -1.0
        row[idx[("slk", i)]] = -1.0
        A_ub.append(row); b_ub.append(-veh.soc_dep_req)

        for t in range(veh.ta + 1, veh.td):
            vv = v_fixed[i][t - veh.ta - 1]
            for w in range(W):
                row = np.zeros(n)
                row[chg(i, t)] = 1.0
                row[temp(i, t, w)] = -veh.beta_chg
                A_ub.append(row); b_ub.append(veh.pc_bar)
                row = np.zeros(n)
                row[heat(i, t)] = 1.0
                row[temp(i, t, w)] = -veh.beta_heat
                A_ub.append(row); b_ub.append(veh.ph_bar)
                if vv >= 0.5:
                    # engaged rule ties charging to cabin temperature
                    row = np.zeros(n)
                    row[chg(i, t)] = 1.0
                    row[temp(i, t, w)] = -th.mu_chg
                    A_ub.append(row); b_ub.append(0.0)
                else:
                    # released rule requires the cabin at setpoint
                    row = np.zeros(n)
                    row[temp(i, t, w)] = -1.0
                    A_ub.append(row); b_ub.append(-th.T_set)

    for t in range(N):
        for w in range(W):
            row = np.zeros(n)
            row[idx["pg"] + t * W + w] = 1.0
            row[idx["pv"] + t * W + w] = 1.0
            for i, veh in enumerate(model.fleet):
                if veh.ta <= t < veh.td:
                    row[chg(i, t)] = -1.0
                    row[heat(i, t)] = -1.0
            A_eq.append(row); b_eq.append(0.0)

    bounds = list(zip(lo, [None if v == np.inf else v for v in hi]))
    res = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub),
                  A_eq=np.array(A_eq), b_eq=np.array(b_eq), bounds=bounds,
                  method="highs")
    if res.status == 0:
        return "optimal", float(res.fun)
    if res.status == 2:
        return "infeasible", np.inf
    return "failed", np.nan


def enumerate_station(model, scen):
    """Exhaustive optimum over all rule-binary assignments.

    Only usable on tiny instances.  Returns the best objective.
    """
    counts = [veh.td - veh.ta - 1 for veh in model.fleet]
    best = np.inf
    for combo in itertools.product((0, 1), repeat=sum(counts)):
        v_fixed = []
        k = 0
        for cnt in counts:
            v_fixed.append(combo[k:k + cnt])
            k += cnt
        status, obj = dense_station_lp(model, scen, v_fixed)
        if status == "optimal":
            best = min(best, obj)
    return best
