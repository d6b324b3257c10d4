"""Instance configuration files.

One JSON file describes a full station instance: time grid, tariff,
fleet (explicit vehicles or a seeded generator), thermal constants,
solar and ambient-temperature sources (CSV files or synthetic
profiles), scenario generation, and solver options.  All randomness
derives from the single top-level seed: the fleet uses ``seed``, the
scenario noise uses ``seed + 1``.

CSV paths are resolved relative to the config file's directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import json
import pathlib

import numpy as np

from .domain import (
    ScenarioSet,
    StationModel,
    Tariff,
    ThermalParams,
    TimeGrid,
    average_profiles,
    build_tou_tariff,
    gen_fleet,
    gen_scenarios,
    load_timeseries,
    scale_solar_to_fleet,
    synth_solar_profile,
    synth_temp_profile,
    vehicle_from_dict,
    vehicle_to_dict,
)


class ConfigError(ValueError):
    """Configuration file contents rejected."""


@dataclass
class SolveOptions:
    """Solver knobs shared by every scheme."""

    gap_tol: float = 1e-4
    time_limit: float = 600.0
    time_limit_per_vehicle: float = 10.0
    resched_limit_per_vehicle: float = 5.0
    step_sizes: tuple = (0.01, 0.05, 0.1, 0.5)
    n_iter: int = 50
    rule_form: str = "reduced"


@dataclass
class Config:
    """Parsed instance description; see ``build_instance``."""

    seed: int
    grid: TimeGrid
    pg_max: float
    big_M: float
    thermal: ThermalParams
    tariff_spec: dict
    fleet_spec: dict
    solar_spec: dict
    temperature_spec: dict
    n_scen: int
    solve: SolveOptions
    base_dir: pathlib.Path = field(default_factory=pathlib.Path)


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return d[key]


def load_config(path) -> Config:
    path = pathlib.Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")

    seed = int(_require(raw, "seed", str(path)))
    g = raw.get("grid", {})
    grid = TimeGrid(start_hour=float(g.get("start_hour", 7.0)),
                    n_steps=int(g.get("n_steps", 60)),
                    dt=float(g.get("dt", 0.25)))
    station = _require(raw, "station", str(path))
    pg_max = float(_require(station, "pg_max_kw", "station"))
    big_M = float(station.get("big_M", 60.0))
    thermal = ThermalParams(**raw.get("thermal", {}))

    fleet_spec = _require(raw, "fleet", str(path))
    if "vehicles" not in fleet_spec and "n_vehicles" not in fleet_spec:
        raise ConfigError("fleet: needs either 'vehicles' or 'n_vehicles'")

    solar_spec = _require(raw, "solar", str(path))
    temp_spec = _require(raw, "temperature", str(path))
    scen_spec = raw.get("scenarios", {})
    n_scen = int(scen_spec.get("count", 10))
    if n_scen < 1:
        raise ConfigError("scenarios.count must be positive")

    solve_raw = dict(raw.get("solve", {}))
    if "step_sizes" in solve_raw:
        solve_raw["step_sizes"] = tuple(float(s)
                                        for s in solve_raw["step_sizes"])
    try:
        solve = SolveOptions(**solve_raw)
    except TypeError as e:
        raise ConfigError(f"solve: {e}") from e

    return Config(seed=seed, grid=grid, pg_max=pg_max, big_M=big_M,
                  thermal=thermal, tariff_spec=raw.get("tariff", {}),
                  fleet_spec=fleet_spec, solar_spec=solar_spec,
                  temperature_spec=temp_spec, n_scen=n_scen, solve=solve,
                  base_dir=path.parent)


def _build_tariff(cfg: Config) -> Tariff:
    spec = cfg.tariff_spec
    if "prices" in spec:
        prices = np.asarray(spec["prices"], dtype=float)
        if prices.shape != (cfg.grid.n_steps,):
            raise ConfigError("tariff.prices length must match the grid")
        return Tariff(price=prices)
    return build_tou_tariff(cfg.grid)


def _build_fleet(cfg: Config):
    spec = cfg.fleet_spec
    if "vehicles" in spec:
        return [vehicle_from_dict(d) for d in spec["vehicles"]]
    kwargs = {}
    for key in ("arrive_hours", "depart_hours", "temp_arr_range",
                "soc_arr_range"):
        if key in spec:
            kwargs[key] = tuple(float(x) for x in spec[key])
    for key in ("soc_dep_req",):
        if key in spec:
            kwargs[key] = float(spec[key])
    for key in ("min_window_steps",):
        if key in spec:
            kwargs[key] = int(spec[key])
    return gen_fleet(int(spec["n_vehicles"]), seed=cfg.seed, grid=cfg.grid,
                     **kwargs)


def _build_profile(cfg: Config, spec: dict, kind: str) -> np.ndarray:
    if "csv" in spec:
        return load_timeseries(cfg.base_dir / spec["csv"], kind, cfg.grid)
    if "csv_pair" in spec:
        pair = spec["csv_pair"]
        if len(pair) != 2:
            raise ConfigError(f"{kind}.csv_pair must list two files")
        return average_profiles(
            load_timeseries(cfg.base_dir / pair[0], kind, cfg.grid),
            load_timeseries(cfg.base_dir / pair[1], kind, cfg.grid))
    if "synthetic" in spec:
        syn = spec["synthetic"]
        if kind == "solar":
            return synth_solar_profile(cfg.grid,
                                       peak_kw=float(syn.get("peak_kw",
                                                             40.0)))
        return synth_temp_profile(cfg.grid,
                                  t_min=float(syn.get("t_min", -3.0)),
                                  t_max=float(syn.get("t_max", 3.2)),
                                  peak_hour=float(syn.get("peak_hour",
                                                          14.0)))
    raise ConfigError(f"{kind}: needs 'csv', 'csv_pair', or 'synthetic'")


def build_instance(cfg: Config):
    """Materialize (StationModel, ScenarioSet) from a parsed config."""
    try:
        fleet = _build_fleet(cfg)
        tariff = _build_tariff(cfg)
        solar = _build_profile(cfg, cfg.solar_spec, "solar")
        if "scale_to_fleet_frac" in cfg.solar_spec:
            solar = scale_solar_to_fleet(
                solar, fleet,
                frac=float(cfg.solar_spec["scale_to_fleet_frac"]))
        temp = _build_profile(cfg, cfg.temperature_spec, "temperature")
        shift = float(cfg.temperature_spec.get("shift_c", 0.0))
        scen = gen_scenarios(solar, temp + shift, n_scen=cfg.n_scen,
                             seed=cfg.seed + 1)
        model = StationModel(grid=cfg.grid, tariff=tariff,
                             thermal=cfg.thermal, fleet=fleet,
                             pg_max=cfg.pg_max, big_M=cfg.big_M)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as e:
        raise ConfigError(f"invalid instance description: {e}") from e
    return model, scen


def config_to_dict(cfg: Config) -> dict:
    return {
        "seed": cfg.seed,
        "grid": {"start_hour": cfg.grid.start_hour,
                 "n_steps": cfg.grid.n_steps, "dt": cfg.grid.dt},
        "station": {"pg_max_kw": cfg.pg_max, "big_M": cfg.big_M},
        "thermal": {
            "eta_chg": cfg.thermal.eta_chg,
            "eta_heat": cfg.thermal.eta_heat,
            "mu_chg": cfg.thermal.mu_chg,
            "mu_heat": cfg.thermal.mu_heat,
            "T_set": cfg.thermal.T_set,
            "T_lo": cfg.thermal.T_lo,
            "T_hi": cfg.thermal.T_hi,
            "heat_capacity_c": cfg.thermal.heat_capacity_c,
            "loss_coeff_hA": cfg.thermal.loss_coeff_hA,
        },
        "tariff": cfg.tariff_spec,
        "fleet": cfg.fleet_spec,
        "solar": cfg.solar_spec,
        "temperature": cfg.temperature_spec,
        "scenarios": {"count": cfg.n_scen},
        "solve": {
            "gap_tol": cfg.solve.gap_tol,
            "time_limit": cfg.solve.time_limit,
            "time_limit_per_vehicle": cfg.solve.time_limit_per_vehicle,
            "resched_limit_per_vehicle":
                cfg.solve.resched_limit_per_vehicle,
            "step_sizes": list(cfg.solve.step_sizes),
            "n_iter": cfg.solve.n_iter,
            "rule_form": cfg.solve.rule_form,
        },
    }


def write_config(cfg: Config, path) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _profile_to_csv(grid: TimeGrid, values: np.ndarray, path,
                    day: str = "2022-11-21") -> None:
    hours = grid.hours()
    with open(path, "w", newline="") as fh:
        fh.write("timestamp,value\n")
        for h, v in zip(hours, values):
            hh = int(h)
            mm = int(round((h - hh) * 60))
            fh.write(f"{day}T{hh:02d}:{mm:02d}:00,{v:.6f}\n")


def gen_config(out_dir, *, seed: int = 11, n_vehicles: int = 2,
               n_scen: int = 10, pg_frac: float = 0.5,
               solar_frac: float = 0.4, t_min: float = -3.0,
               t_max: float = 3.2) -> pathlib.Path:
    """Write a ready-to-run instance: config.json plus the solar and
    temperature CSVs it references.

    The station's grid limit is ``pg_frac`` of the fleet's total
    connected power; solar is scaled so its peak is ``solar_frac`` of
    that connected power.
    """
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = TimeGrid()
    fleet = gen_fleet(n_vehicles, seed=seed, grid=grid)
    total = sum(v.p_total_max for v in fleet)
    solar = scale_solar_to_fleet(synth_solar_profile(grid, peak_kw=total),
                                 fleet, frac=solar_frac)
    temp = synth_temp_profile(grid, t_min=t_min, t_max=t_max)
    _profile_to_csv(grid, solar, out / "solar.csv")
    _profile_to_csv(grid, temp, out / "temperature.csv")

    cfg = Config(
        seed=seed, grid=grid, pg_max=round(pg_frac * total, 6), big_M=60.0,
        thermal=ThermalParams(), tariff_spec={},
        fleet_spec={"vehicles": [vehicle_to_dict(v) for v in fleet]},
        solar_spec={"csv": "solar.csv"},
        temperature_spec={"csv": "temperature.csv"},
        n_scen=n_scen, solve=SolveOptions(), base_dir=out)
    path = out / "config.json"
    write_config(cfg, path)
    return path
