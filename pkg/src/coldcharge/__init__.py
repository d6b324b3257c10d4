"""Day-ahead scheduling for a solar-backed EV charging station in cold weather.

Centralized stochastic scheduling of charging and cabin heating, a
price-coordinated decentralized solver, and heuristic baselines, all
sharing one station description and one metrics surface.
"""

from .baselines import run_instant_chg_heat, run_no_heat, run_smart_chg_heat
from .decentral import run_decentralized
from .domain import (
    ScenarioSet,
    StationModel,
    Tariff,
    ThermalParams,
    TimeGrid,
    TimeSeriesError,
    VehicleSpec,
    build_tou_tariff,
    gen_fleet,
    gen_scenarios,
    load_timeseries,
)
from .metrics import MetricsReport, compute_metrics
from .model import Schedule, solve_centralized

__version__ = "0.1.0"

__all__ = [
    "MetricsReport",
    "ScenarioSet",
    "Schedule",
    "StationModel",
    "Tariff",
    "ThermalParams",
    "TimeGrid",
    "TimeSeriesError",
    "VehicleSpec",
    "build_tou_tariff",
    "compute_metrics",
    "gen_fleet",
    "gen_scenarios",
    "load_timeseries",
    "run_decentralized",
    "run_instant_chg_heat",
    "run_no_heat",
    "run_smart_chg_heat",
    "solve_centralized",
    "__version__",
]
