"""Competing charging schemes.

Three references the coordinated scheme is measured against:

* smart charging with uncoordinated thermostat heaters and a reserved
  heating share of each vehicle's power budget,
* first-come-first-served instant charging with the same thermostat
  and reservation,
* slow smart charging with no heating at all.

All three commit day-ahead powers, then cut whatever would exceed the
station's worst-case capacity and re-simulate the physics, so their
schedules respect grid limits in every scenario by construction;
shortfalls show up as unmet SoC rather than infeasibility.
"""

from __future__ import annotations

from dataclasses import dataclass
import time

import numpy as np

from .domain import ScenarioSet, StationModel
from .metrics import compute_metrics
from .milp import LpBuilder, SolveStatus, solve_lp
from .model import (
    DEPARTURE_PENALTY,
    Schedule,
    charging_cap,
    departure_shortfall,
    expected_grid_cost,
    heating_cap,
    replay_soc,
    replay_temperature,
    thermal_step,
)

DEFAULT_RATIOS = (0.15, 0.20, 0.25, 0.30)
THERMOSTAT_DEADBAND = 0.5
NO_HEAT_FIXED_POINT_ITERS = 3
POWER_EPS = 1e-9


@dataclass(frozen=True)
class ReservationPolicy:
    """Fraction of each vehicle's power budget set aside for heating."""

    ratio: float

    def __post_init__(self):
        if not 0.0 <= self.ratio < 1.0:
            raise ValueError("reservation ratio must be in [0, 1)")


def _smart_charging_lp(model: StationModel, scen: ScenarioSet,
                       chg_cap: np.ndarray):
    """Classical smart-charging LP: grid-cost objective, power balance,
    SoC dynamics, soft departure.  No heating, no thermal state; the
    per-step charge caps come from the caller."""
    grid = model.grid
    N, W = grid.n_steps, scen.n_scen
    dt = grid.dt
    b = LpBuilder()

    pg0 = b.add_vars(N * W, lo=0.0, hi=model.pg_max,
                     obj=np.repeat(model.tariff.price * dt, W)
                     * np.tile(scen.prob, N))
    pv0 = b.add_vars(N * W, lo=0.0, hi=scen.pv_cap.T.ravel())

    chg0 = {}
    soc0 = {}
    slack0 = {}
    for i, veh in enumerate(model.fleet):
        L = veh.n_window
        chg0[i] = b.add_vars(L, lo=0.0,
                             hi=np.maximum(chg_cap[i, veh.ta:veh.td], 0.0))
        soc0[i] = b.add_vars(L + 1, lo=0.0, hi=1.0)
        b.set_bounds(soc0[i], lo=veh.soc_arr, hi=veh.soc_arr)
        slack0[i] = b.add_vars(1, lo=0.0, hi=1.0, obj=DEPARTURE_PENALTY)
        # soc recursion and soft departure target
        k = np.arange(L)
        gain = model.thermal.eta_chg * dt / veh.capacity_kwh
        b.add_block(np.tile(k, 3),
                    np.concatenate([soc0[i] + k + 1, soc0[i] + k,
                                    chg0[i] + k]),
                    np.concatenate([np.ones(L), -np.ones(L),
                                    np.full(L, -gain)]),
                    "=", np.zeros(L))
        b.add_row({soc0[i] + L: 1.0, slack0[i]: 1.0}, ">=",
                  veh.soc_dep_req)

    for t in range(N):
        for w in range(W):
            cols = {pv0 + t * W + w: 1.0, pg0 + t * W + w: 1.0}
            for i, veh in enumerate(model.fleet):
                if veh.ta <= t < veh.td:
                    cols[chg0[i] + (t - veh.ta)] = -1.0
            b.add_row(cols, "==", 0.0)

    return b.build(), chg0, slack0


def _solve_smart_lp(model, scen, chg_cap, time_limit):
    lp, chg0, slack0 = _smart_charging_lp(model, scen, chg_cap)
    sol = solve_lp(lp, time_limit=time_limit)
    if sol.status != SolveStatus.OPTIMAL or sol.x is None:
        raise RuntimeError(f"smart-charging plan failed: {sol.status}")
    N = model.grid.n_steps
    p_chg = np.zeros((len(model.fleet), N))
    for i, veh in enumerate(model.fleet):
        p_chg[i, veh.ta:veh.td] = sol.x[chg0[i]:chg0[i] + veh.n_window]
    return p_chg


def _thermostat_heat(model: StationModel, scen: ScenarioSet,
                     p_chg: np.ndarray, ratio: float) -> np.ndarray:
    """Bang-bang heating committed day-ahead.

    Per scenario, heaters hold the setpoint while the vehicle is
    charging now or in the next step (one-step lookahead), switching on
    below setpoint minus the deadband and off at the setpoint; output
    is capped by the reserved share and the temperature-dependent
    heater limit.  The committed profile is the worst case (maximum)
    over scenarios.
    """
    th = model.thermal
    N, W = model.grid.n_steps, scen.n_scen
    heat = np.zeros((len(model.fleet), N))
    for i, veh in enumerate(model.fleet):
        reserve = ratio * veh.p_total_max
        for w in range(W):
            temp = veh.temp_arr
            on = False
            for t in range(veh.ta, veh.td):
                charging = p_chg[i, t] > POWER_EPS or (
                    t + 1 < veh.td and p_chg[i, t + 1] > POWER_EPS)
                if temp >= th.T_set:
                    on = False
                elif temp < th.T_set - THERMOSTAT_DEADBAND:
                    on = True
                ph = 0.0
                if on and charging:
                    ph = min(reserve, float(heating_cap(veh, temp)),
                             veh.p_total_max - p_chg[i, t])
                    ph = max(ph, 0.0)
                heat[i, t] = max(heat[i, t], ph)
                temp = float(thermal_step(temp, scen.temp_amb[w, t], ph,
                                          p_chg[i, t], veh, th,
                                          model.grid.dt))
    return heat


def _cut_to_capacity(model: StationModel, scen: ScenarioSet,
                     p_chg: np.ndarray, p_heat: np.ndarray):
    """Scale each step's powers so no scenario can exceed the grid
    limit: the committed draw must fit under p̄g plus the worst
    scenario's solar."""
    total = p_chg.sum(axis=0) + p_heat.sum(axis=0)
    cap = model.pg_max + scen.pv_cap.min(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(total > cap, cap / np.maximum(total, POWER_EPS), 1.0)
    f = np.clip(f, 0.0, 1.0)
    return p_chg * f, p_heat * f


def _assemble(model, scen, p_chg, p_heat, scheme, t0, meta=None):
    load = p_chg.sum(axis=0) + p_heat.sum(axis=0)
    p_pv = np.minimum(scen.pv_cap.T, load[:, None])
    p_grid = load[:, None] - p_pv
    soc = replay_soc(model, p_chg)
    temp = replay_temperature(model, scen, p_chg, p_heat)
    cost = expected_grid_cost(model, scen, p_grid)
    unmet = departure_shortfall(model, soc)
    out_meta = {"scheme": scheme}
    if meta:
        out_meta.update(meta)
    return Schedule(
        p_chg=p_chg, p_heat=p_heat, soc=soc, temp=temp, p_grid=p_grid,
        p_pv=p_pv, objective=cost + DEPARTURE_PENALTY * unmet,
        expected_cost=cost, unmet=unmet, feasible=True,
        solver_status="Feasible", mip_gap=np.nan,
        wall_time=time.monotonic() - t0, meta=out_meta)


def _pick_by_cost(model, scen, candidates):
    """Lowest charging-cost candidate; NaN costs lose, ties keep the
    earlier ratio."""
    best = None
    best_cost = np.inf
    for sched in candidates:
        cost = compute_metrics(sched, model, scen).charging_cost
        if np.isnan(cost):
            cost = np.inf
        if cost < best_cost - 1e-12:
            best = sched
            best_cost = cost
    return best if best is not None else candidates[0]


def run_smart_chg_heat(model: StationModel, scen: ScenarioSet,
                       policy_grid=DEFAULT_RATIOS, *,
                       time_limit: float = 120.0) -> Schedule:
    """Smart charging first, thermostat heating second.

    Phase A plans charging with a share of each vehicle's budget held
    back for heat and a temperature-independent charge cap.  Phase B
    runs the local thermostats along the planned charging.  Phase C
    cuts any draw beyond worst-case station capacity and re-simulates.
    The reservation ratio is picked from ``policy_grid`` by charging
    cost.
    """
    t0 = time.monotonic()
    candidates = []
    for ratio in policy_grid:
        pol = ReservationPolicy(ratio)
        cap = np.empty((len(model.fleet), model.grid.n_steps))
        for i, veh in enumerate(model.fleet):
            cap[i] = min((1.0 - pol.ratio) * veh.p_total_max, veh.pc_bar)
        p_chg = _solve_smart_lp(model, scen, cap, time_limit)
        p_heat = _thermostat_heat(model, scen, p_chg, pol.ratio)
        p_chg, p_heat = _cut_to_capacity(model, scen, p_chg, p_heat)
        candidates.append(_assemble(model, scen, p_chg, p_heat,
                                    "smart-heat", t0,
                                    {"ratio": pol.ratio}))
    return _pick_by_cost(model, scen, candidates)


def run_instant_chg_heat(model: StationModel, scen: ScenarioSet,
                         policy_grid=DEFAULT_RATIOS) -> Schedule:
    """First-come-first-served charging with thermostat heaters.

    Each step's available capacity (grid limit plus worst-case solar)
    is split equally among plugged-in vehicles still short of their
    target; each takes its share up to its own caps.  Heating, cuts,
    and ratio selection follow the smart-heat scheme.
    """
    t0 = time.monotonic()
    N = model.grid.n_steps
    dt = model.grid.dt
    avail = model.pg_max + scen.pv_cap.min(axis=0)
    candidates = []
    for ratio in policy_grid:
        pol = ReservationPolicy(ratio)
        p_chg = np.zeros((len(model.fleet), N))
        soc = np.array([v.soc_arr for v in model.fleet])
        for t in range(N):
            active = [i for i, v in enumerate(model.fleet)
                      if v.ta <= t < v.td and soc[i] < v.soc_dep_req - 1e-9]
            if not active:
                continue
            share = avail[t] / len(active)
            for i in active:
                veh = model.fleet[i]
                rate = min(share, (1.0 - pol.ratio) * veh.p_total_max,
                           veh.pc_bar)
                gain = model.thermal.eta_chg * dt / veh.capacity_kwh
                room = (veh.soc_dep_req - soc[i]) / gain
                rate = max(0.0, min(rate, room))
                p_chg[i, t] = rate
                soc[i] += rate * gain
        p_heat = _thermostat_heat(model, scen, p_chg, pol.ratio)
        p_chg_c, p_heat_c = _cut_to_capacity(model, scen, p_chg, p_heat)
        candidates.append(_assemble(model, scen, p_chg_c, p_heat_c,
                                    "instant-heat", t0,
                                    {"ratio": pol.ratio}))
    return _pick_by_cost(model, scen, candidates)


def _no_heat_caps(model: StationModel, scen: ScenarioSet,
                  p_chg: np.ndarray) -> np.ndarray:
    """Worst-scenario practical-rule charge cap along the unheated
    temperature trajectory induced by ``p_chg`` (waste heat included)."""
    th = model.thermal
    temp = replay_temperature(model, scen,
                              p_chg, np.zeros_like(p_chg))
    caps = np.zeros((len(model.fleet), model.grid.n_steps))
    for i, veh in enumerate(model.fleet):
        tw = temp[i, veh.ta:veh.td, :]
        cold = np.maximum(0.0, th.mu_chg * tw)
        warm = np.minimum(charging_cap(veh, tw), veh.p_total_max)
        cap_w = np.where(tw < th.T_set, cold, warm)
        caps[i, veh.ta:veh.td] = cap_w.min(axis=1)
    return caps


def run_no_heat(model: StationModel, scen: ScenarioSet, *,
                time_limit: float = 120.0) -> Schedule:
    """Slow smart charging with heaters off.

    The charge cap obeys the cold-battery rule along the unheated
    temperature trajectory; since charging itself adds waste heat, the
    trajectory and plan are iterated a few times and the final plan is
    clipped to the last trajectory's caps.
    """
    t0 = time.monotonic()
    p_chg = np.zeros((len(model.fleet), model.grid.n_steps))
    caps = _no_heat_caps(model, scen, p_chg)
    for _ in range(NO_HEAT_FIXED_POINT_ITERS):
        p_chg = _solve_smart_lp(model, scen, caps, time_limit)
        caps = _no_heat_caps(model, scen, p_chg)
    p_chg = np.minimum(p_chg, caps)
    p_heat = np.zeros_like(p_chg)
    p_chg, p_heat = _cut_to_capacity(model, scen, p_chg, p_heat)
    return _assemble(model, scen, p_chg, p_heat, "no-heat", t0)
