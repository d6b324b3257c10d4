"""Domain model for a solar-powered EV charging station in a cold climate.

Units used throughout the package: power in kW, energy in kWh, temperature
in degC, tariff prices in cents/kWh.  A day-ahead horizon is a uniform grid
of dt-hour steps inside a single day; step t covers the half-open interval
[start_hour + t*dt, start_hour + (t+1)*dt).

All types validate on construction and are frozen, so instances can be
shared freely between schedulers.
"""

from __future__ import annotations

import csv
import datetime
import json
from dataclasses import dataclass, field, asdict, replace

import numpy as np

# Default time-of-use tariff bands, cents/kWh.
TOU_OFF_PEAK = 12.48   # before 08:00 and from 18:00
TOU_MID_PEAK = 17.22   # 08:00 to 12:00
TOU_ON_PEAK = 22.09    # 12:00 to 18:00

# Nominal vehicle parameters.  Fleet synthesis draws each around these.
BASE_CAPACITY_KWH = 37.0
BASE_MASS_KG = 235.88
BASE_P_TOTAL_KW = 7.4
BASE_PC_KW = 4.8
BASE_BETA_CHG = 0.12      # kW per degC added to the charge cap
BASE_PH_KW = 3.0
BASE_BETA_HEAT = 0.024    # kW per degC removed from the heating cap
PARAM_JITTER = 0.05       # +-5 percent uniform factor per parameter

DEFAULT_SOC_DEP = 0.9


class TimeSeriesError(ValueError):
    """Raised when a CSV time series cannot be parsed or does not cover
    the scheduling horizon."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform day-ahead time grid.

    start_hour : first step start, hours after midnight (e.g. 7.0)
    n_steps    : number of dt-hour steps
    dt         : step length in hours
    """

    start_hour: float = 7.0
    n_steps: int = 60
    dt: float = 0.25

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("time grid needs at least one step")
        if self.dt <= 0:
            raise ValueError("step length must be positive")
        if not 0.0 <= self.start_hour < 24.0:
            raise ValueError("start_hour must lie in [0, 24)")
        if self.start_hour + self.n_steps * self.dt > 24.0 + 1e-9:
            raise ValueError("horizon must end within the same day")

    @property
    def end_hour(self) -> float:
        return self.start_hour + self.n_steps * self.dt

    def hours(self) -> np.ndarray:
        """Step start hours, shape (n_steps,)."""
        return self.start_hour + self.dt * np.arange(self.n_steps)

    def step_of_hour(self, hour: float) -> int:
        """Index of the step containing the given hour of day."""
        if not self.start_hour - 1e-9 <= hour < self.end_hour + 1e-9:
            raise ValueError(f"hour {hour} outside horizon "
                             f"[{self.start_hour}, {self.end_hour})")
        t = int((hour - self.start_hour) / self.dt + 1e-9)
        return min(t, self.n_steps - 1)


@dataclass(frozen=True)
class VehicleSpec:
    """One EV reservation: battery, power limits and the parking window.

    Charging and heating may run at steps ta..td-1; td is the departure
    step (state is evaluated at td).  beta_chg widens the charge cap as the
    battery warms, beta_heat narrows the heating cap.
    """

    id: int
    capacity_kwh: float
    mass_kg: float
    p_total_max: float       # kW, shared charger+heater limit
    pc_bar: float            # kW, charge cap offset
    beta_chg: float          # kW/degC
    ph_bar: float            # kW, heating cap offset
    beta_heat: float         # kW/degC
    soc_arr: float
    soc_dep_req: float
    temp_arr: float          # degC, battery temperature at arrival
    ta: int                  # arrival step index
    td: int                  # departure step index, exclusive for powers

    def __post_init__(self):
        if self.capacity_kwh <= 0:
            raise ValueError(f"vehicle {self.id}: capacity must be positive")
        if self.mass_kg <= 0:
            raise ValueError(f"vehicle {self.id}: mass must be positive")
        for name in ("p_total_max", "pc_bar", "ph_bar"):
            if getattr(self, name) <= 0:
                raise ValueError(f"vehicle {self.id}: {name} must be positive")
        for name in ("beta_chg", "beta_heat"):
            if getattr(self, name) < 0:
                raise ValueError(f"vehicle {self.id}: {name} must be >= 0")
        if not 0.0 <= self.soc_arr <= 1.0:
            raise ValueError(f"vehicle {self.id}: soc_arr outside [0, 1]")
        if not 0.0 <= self.soc_dep_req <= 1.0:
            raise ValueError(f"vehicle {self.id}: soc_dep_req outside [0, 1]")
        if self.ta < 0 or self.td <= self.ta:
            raise ValueError(f"vehicle {self.id}: need 0 <= ta < td")

    @property
    def n_window(self) -> int:
        """Number of steps the vehicle can draw power."""
        return self.td - self.ta

    def window(self) -> range:
        return range(self.ta, self.td)


@dataclass(frozen=True)
class ThermalParams:
    """Battery thermal behaviour and conversion efficiencies.

    heat_capacity_c : kWh/(kg*degC); multiplied by vehicle mass it gives the
                      lumped heat capacity m*c of the pack.
    loss_coeff_hA   : kW/degC, surface loss coefficient of one pack (the
                      product h*A); the effective loss rate is
                      mu_heat * loss_coeff_hA * (T - T_ambient).
    mu_chg          : kW/degC slope of the cold-charging rule cap.
    """

    eta_chg: float = 0.92
    eta_heat: float = 0.8
    mu_chg: float = 0.22
    mu_heat: float = 0.4
    T_set: float = 15.0
    T_lo: float = 0.0
    T_hi: float = 35.0
    heat_capacity_c: float = 2.82e-4
    # Default tuned so a nominal pack cools toward ambient with a time
    # constant of about 4 h: m*c / (mu_heat * hA) = 0.0665 / 0.0166.
    loss_coeff_hA: float = 0.0416

    def __post_init__(self):
        if not 0.0 < self.eta_chg <= 1.0:
            raise ValueError("eta_chg must lie in (0, 1]")
        if not 0.0 < self.eta_heat <= 1.0:
            raise ValueError("eta_heat must lie in (0, 1]")
        if self.mu_chg <= 0 or self.mu_heat <= 0:
            raise ValueError("rule and loss slopes must be positive")
        if not self.T_lo < self.T_set < self.T_hi:
            raise ValueError("need T_lo < T_set < T_hi")
        if self.heat_capacity_c <= 0 or self.loss_coeff_hA <= 0:
            raise ValueError("thermal coefficients must be positive")

    def mc(self, vehicle: VehicleSpec) -> float:
        """Lumped heat capacity of one pack, kWh/degC."""
        return vehicle.mass_kg * self.heat_capacity_c


@dataclass(frozen=True)
class Tariff:
    """Per-step grid energy price, cents/kWh."""

    price: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.price, dtype=float)
        object.__setattr__(self, "price", p)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("tariff must be a non-empty vector")
        if np.any(p <= 0):
            raise ValueError("tariff prices must be positive")

    @property
    def n_steps(self) -> int:
        return self.price.size


@dataclass(frozen=True)
class ScenarioSet:
    """Equiprobable-or-weighted scenarios of solar cap and ambient temperature.

    pv_cap   : kW available from the plant, shape (n_scen, n_steps)
    temp_amb : degC ambient, shape (n_scen, n_steps)
    prob     : scenario weights, sum to one
    """

    prob: np.ndarray
    pv_cap: np.ndarray
    temp_amb: np.ndarray

    def __post_init__(self):
        prob = np.asarray(self.prob, dtype=float)
        pv = np.asarray(self.pv_cap, dtype=float)
        ta = np.asarray(self.temp_amb, dtype=float)
        object.__setattr__(self, "prob", prob)
        object.__setattr__(self, "pv_cap", pv)
        object.__setattr__(self, "temp_amb", ta)
        if prob.ndim != 1 or prob.size == 0:
            raise ValueError("prob must be a non-empty vector")
        if abs(prob.sum() - 1.0) > 1e-9 or np.any(prob <= 0):
            raise ValueError("scenario probabilities must be positive and sum to 1")
        if pv.shape != ta.shape or pv.ndim != 2 or pv.shape[0] != prob.size:
            raise ValueError("pv_cap and temp_amb must be (n_scen, n_steps)")
        if np.any(pv < 0):
            raise ValueError("solar capacity cannot be negative")

    @property
    def n_scen(self) -> int:
        return self.prob.size

    @property
    def n_steps(self) -> int:
        return self.pv_cap.shape[1]


@dataclass(frozen=True)
class StationModel:
    """Everything fixed about one scheduling instance except the scenarios."""

    grid: TimeGrid
    tariff: Tariff
    thermal: ThermalParams
    fleet: tuple
    pg_max: float            # kW, grid connection limit
    big_M: float = 60.0      # guard constant for rule linearization

    def __post_init__(self):
        object.__setattr__(self, "fleet", tuple(self.fleet))
        if not self.fleet:
            raise ValueError("fleet must contain at least one vehicle")
        if self.pg_max <= 0:
            raise ValueError("grid limit must be positive")
        if self.tariff.n_steps != self.grid.n_steps:
            raise ValueError("tariff length must match the time grid")
        ids = [v.id for v in self.fleet]
        if len(set(ids)) != len(ids):
            raise ValueError("vehicle ids must be unique")
        for v in self.fleet:
            if v.td > self.grid.n_steps:
                raise ValueError(f"vehicle {v.id}: window ends past the horizon")
            if v.temp_arr > self.thermal.T_hi:
                raise ValueError(f"vehicle {v.id}: arrival temperature above T_hi")
        need = max(self.thermal.T_set - min(min(v.temp_arr for v in self.fleet),
                                            self.thermal.T_lo),
                   max(v.pc_bar + v.beta_chg * self.thermal.T_hi
                       for v in self.fleet))
        if self.big_M < need:
            raise ValueError(f"big_M={self.big_M} too small; needs >= {need:.3f}")

    @property
    def n_vehicles(self) -> int:
        return len(self.fleet)

    def vehicle(self, vid: int) -> VehicleSpec:
        for v in self.fleet:
            if v.id == vid:
                return v
        raise KeyError(f"no vehicle with id {vid}")

    def connected_capacity(self) -> float:
        """Sum of per-vehicle total power limits, kW."""
        return float(sum(v.p_total_max for v in self.fleet))


def build_tou_tariff(grid: TimeGrid) -> Tariff:
    """Three-band time-of-use tariff assigned by step start hour."""
    hours = grid.hours()
    price = np.full(grid.n_steps, TOU_OFF_PEAK)
    price[(hours >= 8.0) & (hours < 12.0)] = TOU_MID_PEAK
    price[(hours >= 12.0) & (hours < 18.0)] = TOU_ON_PEAK
    return Tariff(price=price)


def gen_fleet(n: int, seed: int, *,
              grid: TimeGrid | None = None,
              arrive_hours: tuple = (7.0, 10.0),
              depart_hours: tuple = (16.0, 22.0),
              temp_arr_range: tuple = (-2.0, 8.0),
              soc_arr_range: tuple = (0.0, 0.4),
              soc_dep_req: float = DEFAULT_SOC_DEP,
              min_window_steps: int = 16) -> list:
    """Synthesize a reservation list around the nominal vehicle.

    Each physical parameter is the nominal value times an independent
    uniform factor in [0.95, 1.05]; soc_arr ~ U[0, 0.4] by default.  Arrival
    and departure hours are drawn uniformly from the given ranges and
    snapped to the grid with at least min_window_steps of parking.  The
    draw order per vehicle is fixed (seven parameter factors, soc_arr,
    temp_arr, arrival hour, departure hour) so a seed fully determines the
    fleet.  RNG: numpy default_rng (PCG64).
    """
    if n < 1:
        raise ValueError("fleet must contain at least one vehicle")
    grid = grid or TimeGrid()
    rng = np.random.default_rng(seed)
    lo, hi = 1.0 - PARAM_JITTER, 1.0 + PARAM_JITTER
    fleet = []
    for i in range(n):
        f = rng.uniform(lo, hi, size=7)
        soc_arr = rng.uniform(*soc_arr_range)
        temp_arr = rng.uniform(*temp_arr_range)
        ta_hour = rng.uniform(*arrive_hours)
        td_hour = rng.uniform(*depart_hours)
        ta = max(0, min(grid.n_steps - min_window_steps,
                        int((ta_hour - grid.start_hour) / grid.dt)))
        td = min(grid.n_steps, int(round((td_hour - grid.start_hour) / grid.dt)))
        td = max(td, ta + min_window_steps)
        fleet.append(VehicleSpec(
            id=i,
            capacity_kwh=BASE_CAPACITY_KWH * f[0],
            mass_kg=BASE_MASS_KG * f[1],
            p_total_max=BASE_P_TOTAL_KW * f[2],
            pc_bar=BASE_PC_KW * f[3],
            beta_chg=BASE_BETA_CHG * f[4],
            ph_bar=BASE_PH_KW * f[5],
            beta_heat=BASE_BETA_HEAT * f[6],
            soc_arr=soc_arr,
            soc_dep_req=soc_dep_req,
            temp_arr=temp_arr,
            ta=ta,
            td=td,
        ))
    return fleet


def gen_scenarios(base_solar: np.ndarray, base_temp: np.ndarray,
                  n_scen: int, seed: int) -> ScenarioSet:
    """Equiprobable scenarios around base profiles.

    Solar gets independent per-step multiplicative noise of +-10 percent and
    is clamped at zero from below; temperature gets +-15 percent per-step
    multiplicative noise plus one +-1 degC additive shift per scenario.
    Draw order: solar noise matrix, temperature noise matrix, shift vector.
    RNG: numpy default_rng (PCG64).
    """
    base_solar = np.asarray(base_solar, dtype=float)
    base_temp = np.asarray(base_temp, dtype=float)
    if base_solar.ndim != 1 or base_temp.shape != base_solar.shape:
        raise ValueError("base profiles must be equal-length vectors")
    if np.any(base_solar < 0):
        raise ValueError("base solar profile cannot be negative")
    if n_scen < 1:
        raise ValueError("need at least one scenario")
    rng = np.random.default_rng(seed)
    t = base_solar.size
    u = rng.uniform(-0.10, 0.10, size=(n_scen, t))
    v = rng.uniform(-0.15, 0.15, size=(n_scen, t))
    s = rng.uniform(-1.0, 1.0, size=n_scen)
    pv = np.clip(base_solar[None, :] * (1.0 + u), 0.0, None)
    temp = base_temp[None, :] * (1.0 + v) + s[:, None]
    prob = np.full(n_scen, 1.0 / n_scen)
    return ScenarioSet(prob=prob, pv_cap=pv, temp_amb=temp)


# ---------------------------------------------------------------------------
# CSV ingestion

def _parse_timestamp(text: str, row_no: int) -> datetime.datetime:
    try:
        return datetime.datetime.fromisoformat(text.strip())
    except ValueError as exc:
        raise TimeSeriesError(f"row {row_no}: bad timestamp {text!r}: {exc}") from None


def load_timeseries(path, kind: str, grid: TimeGrid) -> np.ndarray:
    """Read a (timestamp, value) CSV and map it onto the time grid.

    Rows must be ISO-8601 timestamps within one day.  Each grid step takes
    the mean of the rows falling inside it; steps with no rows are
    forward-filled from the latest earlier row, so coarser (e.g. hourly)
    data is held constant across the step.  The series must cover the
    horizon: the first row at or before the horizon start and the last row
    within one median row spacing of the horizon end.

    kind is one of "solar", "temperature", "price" and controls value
    validation (solar >= 0, price > 0).
    """
    if kind not in ("solar", "temperature", "price"):
        raise ValueError(f"unknown series kind {kind!r}")
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise TimeSeriesError(f"cannot read time series {path}: {exc}") from None
    stamps: list = []
    values: list = []
    with fh:
        reader = csv.reader(fh)
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise TimeSeriesError(f"row {row_no}: expected timestamp,value")
            first = row[0].strip()
            if row_no == 1 and not first[:1].isdigit():
                continue  # header row
            ts = _parse_timestamp(first, row_no)
            try:
                val = float(row[1])
            except ValueError:
                raise TimeSeriesError(
                    f"row {row_no}: non-numeric value {row[1]!r}") from None
            if kind == "solar" and val < 0:
                raise TimeSeriesError(f"row {row_no}: negative solar value {val}")
            if kind == "price" and val <= 0:
                raise TimeSeriesError(f"row {row_no}: non-positive price {val}")
            stamps.append(ts)
            values.append(val)
    if not stamps:
        raise TimeSeriesError(f"{path}: no data rows")
    order = np.argsort([s.isoformat() for s in stamps], kind="stable")
    stamps = [stamps[i] for i in order]
    vals = np.asarray(values, dtype=float)[order]
    day0 = stamps[0].replace(hour=0, minute=0, second=0, microsecond=0)
    hours = np.array([(s - day0).total_seconds() / 3600.0 for s in stamps])

    if hours[0] > grid.start_hour + 1e-9:
        raise TimeSeriesError(
            f"{path}: horizon not covered, first row at hour {hours[0]:.2f} "
            f"after horizon start {grid.start_hour:.2f}")
    spacing = float(np.median(np.diff(hours))) if hours.size > 1 else 0.0
    last_step_start = grid.start_hour + (grid.n_steps - 1) * grid.dt
    if hours[-1] + spacing < last_step_start - 1e-9:
        raise TimeSeriesError(
            f"{path}: horizon not covered, data ends at hour {hours[-1]:.2f} "
            f"(spacing {spacing:.2f} h) before horizon end {grid.end_hour:.2f}")

    out = np.empty(grid.n_steps)
    for t in range(grid.n_steps):
        t0 = grid.start_hour + t * grid.dt
        inside = (hours >= t0 - 1e-9) & (hours < t0 + grid.dt - 1e-9)
        if inside.any():
            out[t] = vals[inside].mean()
        else:
            before = hours <= t0 + 1e-9
            out[t] = vals[np.nonzero(before)[0][-1]]
    return out


def average_profiles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise mean of two equally shaped profiles."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("profiles must have equal shape")
    return 0.5 * (a + b)


def scale_solar_to_fleet(profile: np.ndarray, fleet, frac: float = 0.4) -> np.ndarray:
    """Scale a solar profile down so its peak is frac of the connected
    charging capacity.  Profiles already below the target are returned
    unchanged (never scaled up)."""
    profile = np.asarray(profile, dtype=float)
    cap = frac * sum(v.p_total_max for v in fleet)
    peak = profile.max(initial=0.0)
    if peak <= cap or peak == 0.0:
        return profile.copy()
    return profile * (cap / peak)


# ---------------------------------------------------------------------------
# Synthetic cold-day base profiles (used by config synthesis and tests)

def synth_solar_profile(grid: TimeGrid, peak_kw: float,
                        sunrise: float = 7.75, sunset: float = 16.5) -> np.ndarray:
    """Smooth clear-sky bell over a short winter day, zero outside it."""
    if peak_kw < 0:
        raise ValueError("peak must be >= 0")
    h = grid.hours()
    out = np.zeros(grid.n_steps)
    day = (h >= sunrise) & (h <= sunset)
    phase = (h[day] - sunrise) / (sunset - sunrise)
    out[day] = peak_kw * np.sin(np.pi * phase) ** 2
    return out


def synth_temp_profile(grid: TimeGrid, t_min: float = -3.0, t_max: float = 3.2,
                       peak_hour: float = 14.0) -> np.ndarray:
    """Piecewise-linear cold-day ambient temperature: coldest at the horizon
    start, warmest at peak_hour, cooling into the evening."""
    h = grid.hours()
    t_end = t_min + 0.25 * (t_max - t_min)
    out = np.empty(grid.n_steps)
    rise = h <= peak_hour
    span_up = max(peak_hour - grid.start_hour, 1e-9)
    out[rise] = t_min + (t_max - t_min) * (h[rise] - grid.start_hour) / span_up
    fall = ~rise
    span_dn = max(grid.end_hour - peak_hour, 1e-9)
    out[fall] = t_max + (t_end - t_max) * (h[fall] - peak_hour) / span_dn
    return out


# ---------------------------------------------------------------------------
# JSON serialization helpers

def vehicle_to_dict(v: VehicleSpec) -> dict:
    return asdict(v)


def vehicle_from_dict(d: dict) -> VehicleSpec:
    return VehicleSpec(**d)


def model_to_dict(model: StationModel) -> dict:
    return {
        "grid": {"start_hour": model.grid.start_hour,
                 "n_steps": model.grid.n_steps,
                 "dt": model.grid.dt},
        "tariff": {"price": model.tariff.price.tolist()},
        "thermal": asdict(model.thermal),
        "fleet": [vehicle_to_dict(v) for v in model.fleet],
        "pg_max": model.pg_max,
        "big_M": model.big_M,
    }


def model_from_dict(d: dict) -> StationModel:
    return StationModel(
        grid=TimeGrid(**d["grid"]),
        tariff=Tariff(price=np.asarray(d["tariff"]["price"], dtype=float)),
        thermal=ThermalParams(**d["thermal"]),
        fleet=[vehicle_from_dict(v) for v in d["fleet"]],
        pg_max=d["pg_max"],
        big_M=d.get("big_M", 60.0),
    )
