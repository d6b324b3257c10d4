"""Centralized scheduling model for charging plus cabin heat.

Decision layout, constraint assembly, solve wrapper and replay checks.
Here-and-now decisions (charging power, heating power, state of charge)
are shared across scenarios; grid draw, solar use and cabin temperature
are recourse, one copy per scenario.  Cost is expected grid energy cost
in cents plus a penalty on departure state-of-charge shortfall.

Powers are kW, energies kWh, temperatures degC, prices cents per kWh.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import csv
import json

import numpy as np

from .domain import ScenarioSet, StationModel, ThermalParams, VehicleSpec
from .milp import (
    LpBuilder,
    MilpProblem,
    ProblemError,
    SolveStatus,
    SolveTimeout,
    relax,
    solve_lp,
    solve_milp,
)

# Penalty (cents per unit of state-of-charge) on missing the departure
# target.  Large against energy cost so shortfall is a last resort.
DEPARTURE_PENALTY = 1000.0

RULE_FORMS = ("reduced", "per_scenario")


def thermal_step(temp, amb, p_heat, p_chg, veh: VehicleSpec,
                 thermal: ThermalParams, dt: float):
    """One step of the cabin heat balance.  Accepts scalars or arrays.

    Losses to ambient scale with the dimensionless loss factor, heating
    enters at heater efficiency, and charging sheds its conversion loss
    into the cabin.
    """
    mc = thermal.mc(veh)
    hA = thermal.mu_heat * thermal.loss_coeff_hA
    gain = (thermal.eta_heat * np.asarray(p_heat, dtype=float)
            + (1.0 - thermal.eta_chg) * np.asarray(p_chg, dtype=float))
    return temp + (dt / mc) * (gain - hA * (np.asarray(temp, float) - amb))


def charging_cap(veh: VehicleSpec, temp):
    """Battery-side charging limit at cabin temperature ``temp`` (kW)."""
    return np.maximum(0.0, veh.pc_bar + veh.beta_chg * np.asarray(temp, float))


def heating_cap(veh: VehicleSpec, temp):
    """Heater output limit at cabin temperature ``temp`` (kW)."""
    return np.maximum(0.0, veh.ph_bar + veh.beta_heat * np.asarray(temp, float))


def rule_big_m(model: StationModel) -> tuple[float, np.ndarray]:
    """Tight constants for the two rule rows.

    ``m_t`` bounds how far below the setpoint a boxed cabin temperature
    can sit; ``m_p[i]`` bounds the charging power the rule must be able
    to release when the cabin is warm, which for each vehicle peaks at
    the setpoint because the rule slope exceeds the cap slope.
    """
    th = model.thermal
    m_t = max(th.T_set - th.T_lo, 1e-6)
    m_p = np.array([
        max(min(v.p_total_max, v.pc_bar + v.beta_chg * th.T_set)
            - th.mu_chg * th.T_set, 0.0)
        for v in model.fleet
    ])
    return m_t, m_p


@dataclass(frozen=True)
class VehicleVars:
    """Flat-index bookkeeping for one vehicle's block of variables."""

    ta: int
    td: int
    n_scen: int
    chg0: int
    heat0: int
    soc0: int
    temp0: int
    v0: int
    slack: int
    rule_form: str

    @property
    def n_window(self) -> int:
        return self.td - self.ta

    def p_chg(self, t: int) -> int:
        return self.chg0 + (t - self.ta)

    def p_heat(self, t: int) -> int:
        return self.heat0 + (t - self.ta)

    def soc(self, t: int) -> int:
        # states at step boundaries ta..td
        return self.soc0 + (t - self.ta)

    def temp(self, t: int, w: int) -> int:
        return self.temp0 + (t - self.ta) * self.n_scen + w

    def v(self, t: int, w: int = 0) -> int:
        # rule binaries exist for interior steps only; the arrival step
        # is folded into bounds because its temperature is data
        if not self.ta < t < self.td:
            raise IndexError(f"no rule binary at step {t}")
        k = t - self.ta - 1
        if self.rule_form == "per_scenario":
            return self.v0 + k * self.n_scen + w
        return self.v0 + k


@dataclass(frozen=True)
class VariableMap:
    """Flat-index bookkeeping for a full station problem."""

    n_steps: int
    n_scen: int
    pg0: int
    pv0: int
    vehicles: tuple[VehicleVars, ...]
    n_vars: int

    def p_grid(self, t: int, w: int) -> int:
        return self.pg0 + t * self.n_scen + w

    def p_pv(self, t: int, w: int) -> int:
        return self.pv0 + t * self.n_scen + w

    def grid_array(self, x: np.ndarray) -> np.ndarray:
        n = self.n_steps * self.n_scen
        return x[self.pg0:self.pg0 + n].reshape(self.n_steps, self.n_scen)

    def pv_array(self, x: np.ndarray) -> np.ndarray:
        n = self.n_steps * self.n_scen
        return x[self.pv0:self.pv0 + n].reshape(self.n_steps, self.n_scen)

    def power_arrays(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Charging and heating (n_veh, n_steps), zero outside windows."""
        n_veh = len(self.vehicles)
        p_chg = np.zeros((n_veh, self.n_steps))
        p_heat = np.zeros((n_veh, self.n_steps))
        for i, vv in enumerate(self.vehicles):
            p_chg[i, vv.ta:vv.td] = x[vv.chg0:vv.chg0 + vv.n_window]
            p_heat[i, vv.ta:vv.td] = x[vv.heat0:vv.heat0 + vv.n_window]
        return p_chg, p_heat


def add_vehicle_block(b: LpBuilder, veh: VehicleSpec, model: StationModel,
                      scen: ScenarioSet, *, rule_form: str, m_t: float,
                      m_p: float, obj_power: np.ndarray | None = None,
                      binaries: list | None = None) -> VehicleVars:
    """Append one vehicle's variables and coupling-free constraints.

    Covers charging, heating, state of charge, scenario temperatures,
    rule binaries, the departure shortfall and every constraint that
    involves only this vehicle.  ``obj_power[t]`` is an optional cost per
    kWh applied to charging plus heating (used by the per-vehicle
    subproblems); the centralized model prices grid power instead.
    Returns the index block; new binary indices are appended to
    ``binaries`` when given.
    """
    th = model.thermal
    dt = model.grid.dt
    ta, td = veh.ta, veh.td
    L = td - ta
    W = scen.n_scen
    temp_amb = scen.temp_amb  # (W, n_steps)

    power_obj = np.zeros(L)
    if obj_power is not None:
        power_obj = np.asarray(obj_power, dtype=float)[ta:td] * dt

    chg0 = b.add_vars(L, lo=0.0, hi=veh.p_total_max, obj=power_obj)
    heat0 = b.add_vars(L, lo=0.0, hi=veh.p_total_max, obj=power_obj)
    soc0 = b.add_vars(L + 1, lo=0.0, hi=1.0)
    temp0 = b.add_vars((L + 1) * W, lo=th.T_lo, hi=th.T_hi)
    slack = b.add_vars(1, lo=0.0, hi=1.0, obj=DEPARTURE_PENALTY)

    nv = (L - 1) * W if rule_form == "per_scenario" else L - 1
    v0 = b.add_vars(nv, lo=0.0, hi=1.0) if nv else b.n_vars
    if binaries is not None:
        binaries.extend(range(v0, v0 + nv))

    # arrival state is data: pin the first boundary in every scenario
    b.set_bounds(soc0, veh.soc_arr, veh.soc_arr)
    for w in range(W):
        b.set_bounds(temp0 + w, veh.temp_arr, veh.temp_arr)

    # arrival-step caps fold the known temperature into plain bounds
    hi_chg = float(charging_cap(veh, veh.temp_arr))
    if veh.temp_arr < th.T_set:
        hi_chg = min(hi_chg, max(0.0, th.mu_chg * veh.temp_arr))
    b.tighten_upper(chg0, hi_chg)
    b.tighten_upper(heat0, float(heating_cap(veh, veh.temp_arr)))

    # state of charge recursion over the window
    gain = th.eta_chg * dt / veh.capacity_kwh
    k = np.arange(L)
    rows = np.concatenate([k, k, k])
    cols = np.concatenate([soc0 + k + 1, soc0 + k, chg0 + k])
    vals = np.concatenate([np.ones(L), -np.ones(L), np.full(L, -gain)])
    b.add_block(rows, cols, vals, "=", np.zeros(L))

    # departure target, soft
    b.add_row({soc0 + L: 1.0, slack: 1.0}, ">=", veh.soc_dep_req)

    # cabin heat balance, one row per step and scenario
    a = th.mc(veh) / dt
    hA = th.mu_heat * th.loss_coeff_hA
    kw = np.arange(L * W)
    t_of = kw // W
    w_of = kw % W
    rows = np.concatenate([kw, kw, kw, kw])
    cols = np.concatenate([
        temp0 + (t_of + 1) * W + w_of,
        temp0 + t_of * W + w_of,
        heat0 + t_of,
        chg0 + t_of,
    ])
    vals = np.concatenate([
        np.full(L * W, a),
        np.full(L * W, hA - a),
        np.full(L * W, -th.eta_heat),
        np.full(L * W, -(1.0 - th.eta_chg)),
    ])
    rhs = hA * temp_amb[:, ta:td].T.ravel()
    b.add_block(rows, cols, vals, "=", rhs)

    # joint power cap per step
    rows = np.concatenate([k, k])
    cols = np.concatenate([chg0 + k, heat0 + k])
    b.add_block(rows, cols, np.ones(2 * L), "<=",
                np.full(L, veh.p_total_max))

    if L > 1:
        # temperature-dependent caps for interior steps, per scenario
        ki = np.arange((L - 1) * W)
        ti = ki // W + 1     # local step index 1..L-1
        wi = ki % W
        tcol = temp0 + ti * W + wi
        n = ki.size
        rows = np.concatenate([ki, ki])
        b.add_block(rows, np.concatenate([chg0 + ti, tcol]),
                    np.concatenate([np.ones(n),
                                    np.full(n, -veh.beta_chg)]),
                    "<=", np.full(n, veh.pc_bar))
        b.add_block(rows, np.concatenate([heat0 + ti, tcol]),
                    np.concatenate([np.ones(n),
                                    np.full(n, -veh.beta_heat)]),
                    "<=", np.full(n, veh.ph_bar))

        # practical rule: when any (this) scenario sits below the
        # setpoint the binary trips and charging is tied to temperature
        if rule_form == "per_scenario":
            vcol = v0 + (ti - 1) * W + wi
            rows = np.concatenate([ki, ki, ki])
            b.add_block(rows,
                        np.concatenate([chg0 + ti, tcol, vcol]),
                        np.concatenate([np.ones(n),
                                        np.full(n, -th.mu_chg),
                                        np.full(n, m_p)]),
                        "<=", np.full(n, m_p))
            rows = np.concatenate([ki, ki])
            b.add_block(rows,
                        np.concatenate([vcol, tcol]),
                        np.concatenate([np.full(n, m_t), np.ones(n)]),
                        ">=", np.full(n, th.T_set))
        else:
            vcol = v0 + (ti - 1)
            rows = np.concatenate([ki, ki, ki])
            b.add_block(rows,
                        np.concatenate([chg0 + ti, tcol, vcol]),
                        np.concatenate([np.ones(n),
                                        np.full(n, -th.mu_chg),
                                        np.full(n, m_p)]),
                        "<=", np.full(n, m_p))
            rows = np.concatenate([ki, ki])
            b.add_block(rows,
                        np.concatenate([vcol, tcol]),
                        np.concatenate([np.full(n, m_t), np.ones(n)]),
                        ">=", np.full(n, th.T_set))

    return VehicleVars(ta=ta, td=td, n_scen=W, chg0=chg0, heat0=heat0,
                       soc0=soc0, temp0=temp0, v0=v0, slack=slack,
                       rule_form=rule_form)


def build_centralized(model: StationModel, scen: ScenarioSet, *,
                      rule_form: str = "reduced"
                      ) -> tuple[MilpProblem, VariableMap]:
    """Assemble the station-wide problem.

    ``rule_form`` picks how the practical rule couples to scenarios:
    ``"reduced"`` shares one binary per vehicle and step across all
    scenarios, ``"per_scenario"`` gives each scenario its own copy.  The
    two have equal optimal cost; the reduced form is far smaller.
    """
    if rule_form not in RULE_FORMS:
        raise ValueError(f"rule_form must be one of {RULE_FORMS}")
    if scen.n_steps != model.grid.n_steps:
        raise ValueError("scenario horizon does not match the time grid")
    N = model.grid.n_steps
    W = scen.n_scen
    dt = model.grid.dt

    b = LpBuilder()
    # expected grid energy cost, cents
    grid_obj = np.repeat(model.tariff.price * dt, W) * np.tile(scen.prob, N)
    pg0 = b.add_vars(N * W, lo=0.0, hi=model.pg_max, obj=grid_obj)
    pv0 = b.add_vars(N * W, lo=0.0, hi=np.maximum(scen.pv_cap.T.ravel(), 0.0))

    m_t, m_p = rule_big_m(model)
    binaries: list = []
    vehicles = []
    for i, veh in enumerate(model.fleet):
        vehicles.append(add_vehicle_block(b, veh, model, scen,
                                          rule_form=rule_form, m_t=m_t,
                                          m_p=float(m_p[i]),
                                          binaries=binaries))

    # power balance per step and scenario: solar plus grid covers load
    kw = np.arange(N * W)
    rows = [kw, kw]
    cols = [pg0 + kw, pv0 + kw]
    vals = [np.ones(N * W), np.ones(N * W)]
    for vv in vehicles:
        t_range = np.arange(vv.ta, vv.td)
        r = (t_range[:, None] * W + np.arange(W)[None, :]).ravel()
        local = np.repeat(np.arange(vv.n_window), W)
        rows.extend([r, r])
        cols.extend([vv.chg0 + local, vv.heat0 + local])
        vals.extend([-np.ones(r.size), -np.ones(r.size)])
    b.add_block(np.concatenate(rows), np.concatenate(cols),
                np.concatenate(vals), "=", np.zeros(N * W))

    problem = MilpProblem(b.build(), binaries=np.array(binaries, dtype=np.int64))
    vmap = VariableMap(n_steps=N, n_scen=W, pg0=pg0, pv0=pv0,
                       vehicles=tuple(vehicles), n_vars=problem.lp.n_vars)
    return problem, vmap


def build_vehicle(model: StationModel, index: int, scen: ScenarioSet,
                  price: np.ndarray, *, rule_form: str = "reduced",
                  cap_rhs: np.ndarray | None = None
                  ) -> tuple[MilpProblem, VehicleVars]:
    """One vehicle's subproblem under a posted energy price.

    ``price[t]`` is cents per kWh applied to the vehicle's total draw.
    ``cap_rhs[t]``, when given, caps charging plus heating per step (a
    capacity share handed down by the coordinator).
    """
    veh = model.fleet[index]
    b = LpBuilder()
    m_t, m_p = rule_big_m(model)
    binaries: list = []
    vv = add_vehicle_block(b, veh, model, scen, rule_form=rule_form,
                           m_t=m_t, m_p=float(m_p[index]),
                           obj_power=price, binaries=binaries)
    if cap_rhs is not None:
        cap = np.asarray(cap_rhs, dtype=float)[veh.ta:veh.td]
        k = np.arange(vv.n_window)
        b.add_block(np.concatenate([k, k]),
                    np.concatenate([vv.chg0 + k, vv.heat0 + k]),
                    np.ones(2 * k.size), "<=", np.maximum(cap, 0.0))
    problem = MilpProblem(b.build(), binaries=np.array(binaries, dtype=np.int64))
    return problem, vv


# ---------------------------------------------------------------------------
# schedules and replay


@dataclass
class Schedule:
    """A station plan plus its realized trajectories and solve record.

    Power arrays cover the full horizon with zeros outside each
    vehicle's window.  ``soc`` and ``temp`` have one extra boundary
    column and hold arrival values before the window and final values
    after it.
    """

    p_chg: np.ndarray            # (n_veh, n_steps) kW
    p_heat: np.ndarray           # (n_veh, n_steps) kW
    soc: np.ndarray              # (n_veh, n_steps + 1)
    temp: np.ndarray             # (n_veh, n_steps + 1, n_scen) degC
    p_grid: np.ndarray           # (n_steps, n_scen) kW
    p_pv: np.ndarray             # (n_steps, n_scen) kW
    objective: float             # cents, cost plus shortfall penalty
    expected_cost: float         # cents
    unmet: float                 # summed departure shortfall, SoC units
    feasible: bool
    solver_status: str
    mip_gap: float
    wall_time: float
    meta: dict = field(default_factory=dict)


def replay_soc(model: StationModel, p_chg: np.ndarray) -> np.ndarray:
    """Integrate state of charge from a charging plan."""
    th = model.thermal
    dt = model.grid.dt
    n_veh = len(model.fleet)
    soc = np.zeros((n_veh, model.grid.n_steps + 1))
    for i, veh in enumerate(model.fleet):
        soc[i, :veh.ta + 1] = veh.soc_arr
        gain = th.eta_chg * dt / veh.capacity_kwh
        steps = np.cumsum(p_chg[i, veh.ta:veh.td]) * gain
        soc[i, veh.ta + 1:veh.td + 1] = veh.soc_arr + steps
        soc[i, veh.td + 1:] = soc[i, veh.td]
    return soc


def replay_temperature(model: StationModel, scen: ScenarioSet,
                       p_chg: np.ndarray, p_heat: np.ndarray) -> np.ndarray:
    """Integrate cabin temperature per scenario from a power plan."""
    th = model.thermal
    dt = model.grid.dt
    n_veh = len(model.fleet)
    W = scen.n_scen
    temp = np.zeros((n_veh, model.grid.n_steps + 1, W))
    for i, veh in enumerate(model.fleet):
        temp[i, :veh.ta + 1, :] = veh.temp_arr
        cur = np.full(W, veh.temp_arr)
        for t in range(veh.ta, veh.td):
            cur = thermal_step(cur, scen.temp_amb[:, t], p_heat[i, t],
                               p_chg[i, t], veh, th, dt)
            temp[i, t + 1, :] = cur
        temp[i, veh.td + 1:, :] = temp[i, veh.td, :]
    return temp


def verify_replay(model: StationModel, scen: ScenarioSet,
                  sched: Schedule) -> float:
    """Largest gap between stored trajectories and a fresh replay."""
    soc = replay_soc(model, sched.p_chg)
    temp = replay_temperature(model, scen, sched.p_chg, sched.p_heat)
    return float(max(np.abs(soc - sched.soc).max(initial=0.0),
                     np.abs(temp - sched.temp).max(initial=0.0)))


def extract_schedule(model: StationModel, scen: ScenarioSet,
                     vmap: VariableMap, x: np.ndarray, *,
                     solver_status: str, mip_gap: float, wall_time: float,
                     objective: float | None = None,
                     meta: dict | None = None) -> Schedule:
    """Turn a solution vector into a schedule with replayed states."""
    p_chg, p_heat = vmap.power_arrays(x)
    p_grid = vmap.grid_array(x)
    p_pv = vmap.pv_array(x)
    soc = replay_soc(model, p_chg)
    temp = replay_temperature(model, scen, p_chg, p_heat)
    cost = expected_grid_cost(model, scen, p_grid)
    unmet = departure_shortfall(model, soc)
    if objective is None:
        objective = cost + DEPARTURE_PENALTY * unmet
    return Schedule(p_chg=p_chg, p_heat=p_heat, soc=soc, temp=temp,
                    p_grid=p_grid, p_pv=p_pv, objective=float(objective),
                    expected_cost=cost, unmet=unmet, feasible=True,
                    solver_status=solver_status, mip_gap=float(mip_gap),
                    wall_time=float(wall_time), meta=meta or {})


def expected_grid_cost(model: StationModel, scen: ScenarioSet,
                       p_grid: np.ndarray) -> float:
    """Probability-weighted grid energy cost in cents."""
    per_scen = model.grid.dt * (model.tariff.price @ p_grid)
    return float(per_scen @ scen.prob)


def departure_shortfall(model: StationModel, soc: np.ndarray) -> float:
    """Total missing state of charge at departure across the fleet."""
    return float(sum(max(0.0, veh.soc_dep_req - soc[i, veh.td])
                     for i, veh in enumerate(model.fleet)))


def warm_start(problem: MilpProblem) -> np.ndarray | None:
    """Feasible point with every rule binary engaged.

    Tying charging to cabin temperature everywhere is always allowed,
    and the shortfall slack keeps the departure rows satisfiable, so
    this LP is feasible whenever the model is well posed.
    """
    lp = relax(problem)
    lo = lp.lo.copy()
    hi = lp.hi.copy()
    lo[problem.binaries] = 1.0
    hi[problem.binaries] = 1.0
    sol = solve_lp(lp.with_bounds(lo, hi))
    if sol.status is SolveStatus.OPTIMAL:
        return sol.x
    return None


def diagnose_infeasible(model: StationModel, scen: ScenarioSet, *,
                        rule_form: str = "reduced") -> str:
    """Name the constraint family that makes the model infeasible.

    Retries the relaxation with one family softened at a time and
    reports the first softening that restores feasibility.
    """
    import dataclasses as _dc

    def relaxation_feasible(m: StationModel) -> bool:
        prob, _ = build_centralized(m, scen, rule_form=rule_form)
        return solve_lp(relax(prob)).status is SolveStatus.OPTIMAL

    th = model.thermal
    wide = _dc.replace(model, big_M=1e6,
                       thermal=_dc.replace(th, T_lo=th.T_lo - 100.0,
                                           T_hi=th.T_hi + 100.0))
    if relaxation_feasible(wide):
        return "cabin temperature box"
    big = _dc.replace(model, pg_max=model.pg_max * 100.0 + 1e3)
    if relaxation_feasible(big):
        return "grid connection capacity"
    both = _dc.replace(wide, pg_max=model.pg_max * 100.0 + 1e3)
    if relaxation_feasible(both):
        return "temperature box and grid capacity jointly"
    return "vehicle windows or parameters"


def solve_centralized(model: StationModel, scen: ScenarioSet, *,
                      rule_form: str = "reduced", time_limit: float = 600.0,
                      gap_tol: float = 1e-4, method: str = "auto",
                      warm: bool = True) -> Schedule:
    """Solve the station problem and return the schedule.

    Raises :class:`ProblemError` with the offending constraint family
    when the instance is infeasible.
    """
    problem, vmap = build_centralized(model, scen, rule_form=rule_form)
    incumbent = warm_start(problem) if warm else None
    sol = solve_milp(problem, time_limit=time_limit, gap_tol=gap_tol,
                     incumbent_x=incumbent, lp_method=method)
    if sol.status is SolveStatus.INFEASIBLE or sol.x is None:
        if sol.status is SolveStatus.INFEASIBLE:
            family = diagnose_infeasible(model, scen, rule_form=rule_form)
            raise ProblemError(f"instance infeasible: {family}")
        raise SolveTimeout(
            f"no feasible schedule found within limits ({sol.status})")
    meta = {"scheme": "tcsc-central", "nodes": sol.nodes,
            "rule_form": rule_form,
            "n_binaries": int(problem.binaries.size),
            "incumbents": [(n, o, lbl) for n, o, lbl in sol.incumbent_trace]}
    return extract_schedule(model, scen, vmap, sol.x,
                            solver_status=str(sol.status),
                            mip_gap=sol.gap, wall_time=sol.wall_time,
                            objective=sol.objective, meta=meta)


def check_rule_equivalence(model: StationModel, scen: ScenarioSet, *,
                           time_limit: float = 300.0, gap_tol: float = 1e-8,
                           max_binaries: int = 2000,
                           force: bool = False) -> dict:
    """Solve both rule forms to tight gap and compare optimal costs.

    The shared-binary form and the per-scenario form agree because the
    binding scenario for the rule is the coldest one; guard on size
    since the per-scenario form multiplies the binary count.
    """
    reduced, _ = build_centralized(model, scen, rule_form="reduced")
    full, _ = build_centralized(model, scen, rule_form="per_scenario")
    if full.binaries.size > max_binaries and not force:
        raise ProblemError(
            f"per-scenario form has {full.binaries.size} binaries; "
            f"pass force=True to compare anyway")
    out = {}
    for name, prob in (("reduced", reduced), ("per_scenario", full)):
        sol = solve_milp(prob, time_limit=time_limit, gap_tol=gap_tol,
                         incumbent_x=warm_start(prob))
        if sol.status is not SolveStatus.OPTIMAL:
            raise ProblemError(f"{name} form not solved to gap: {sol.status}")
        out[f"objective_{name}"] = sol.objective
        out[f"nodes_{name}"] = sol.nodes
        out[f"binaries_{name}"] = int(prob.binaries.size)
    out["abs_diff"] = abs(out["objective_reduced"]
                          - out["objective_per_scenario"])
    return out


# ---------------------------------------------------------------------------
# on-disk forms


def schedule_to_dict(sched: Schedule, model: StationModel) -> dict:
    g = model.grid
    vehicles = []
    for i, veh in enumerate(model.fleet):
        vehicles.append({
            "id": veh.id,
            "ta": veh.ta,
            "td": veh.td,
            "p_chg_kw": [round(float(v), 9) for v in sched.p_chg[i]],
            "p_heat_kw": [round(float(v), 9) for v in sched.p_heat[i]],
            "soc": [round(float(v), 9) for v in sched.soc[i]],
        })
    return {
        "grid": {"start_hour": g.start_hour, "n_steps": g.n_steps,
                 "dt": g.dt},
        "objective_cents": round(sched.objective, 9),
        "expected_cost_cents": round(sched.expected_cost, 9),
        "unmet_soc": round(sched.unmet, 9),
        "feasible": sched.feasible,
        "solver_status": sched.solver_status,
        "mip_gap": sched.mip_gap,
        "wall_time_s": sched.wall_time,
        "vehicles": vehicles,
        "p_grid_kw": [[round(float(v), 9) for v in row]
                      for row in sched.p_grid],
        "p_pv_kw": [[round(float(v), 9) for v in row]
                    for row in sched.p_pv],
    }


def write_schedule_json(sched: Schedule, model: StationModel,
                        path: str) -> None:
    with open(path, "w") as fh:
        json.dump(schedule_to_dict(sched, model), fh, indent=2,
                  sort_keys=True)
        fh.write("\n")


def write_schedule_csv(sched: Schedule, model: StationModel,
                       path: str) -> None:
    """Long-form per-vehicle plan: one row per vehicle and window step,
    with the end-of-step battery temperature in every scenario."""
    hours = model.grid.hours()
    n_scen = sched.temp.shape[2]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["vehicle", "step", "hour", "p_chg_kw", "p_heat_kw",
                    "soc_end"]
                   + [f"temp_c_w{k}" for k in range(n_scen)])
        for i, veh in enumerate(model.fleet):
            for t in range(veh.ta, veh.td):
                w.writerow([veh.id, t, f"{hours[t]:.2f}",
                            f"{sched.p_chg[i, t]:.6f}",
                            f"{sched.p_heat[i, t]:.6f}",
                            f"{sched.soc[i, t + 1]:.6f}"]
                           + [f"{sched.temp[i, t + 1, k]:.6f}"
                              for k in range(n_scen)])
