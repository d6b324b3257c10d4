"""Scheme-comparison metrics.

Four station-level statistics, each a probability-weighted average over
scenarios: unmet SoC at departure, charging cost per kWh stored,
heating share of total energy (overhead), and solar utilization.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
import csv
import json
import math

import numpy as np

from .domain import ScenarioSet, StationModel
from .model import Schedule, departure_shortfall, expected_grid_cost


@dataclass(frozen=True)
class MetricsReport:
    """One scheme's scorecard on one instance.

    ``charging_cost`` is NaN when the schedule stores no energy (there
    is nothing to normalize by).
    """

    scheme: str
    instance: str
    unmet_soc: float
    charging_cost: float
    overhead_rate: float
    solar_usage_rate: float
    wall_time: float

    def __post_init__(self):
        if not 0.0 <= self.overhead_rate <= 100.0:
            raise ValueError("overhead rate is a percentage")
        if not 0.0 <= self.solar_usage_rate <= 100.0 + 1e-9:
            raise ValueError("solar usage rate is a percentage")
        if self.unmet_soc < 0:
            raise ValueError("unmet SoC cannot be negative")


def compute_metrics(schedule: Schedule, model: StationModel,
                    scen: ScenarioSet, *, scheme: str | None = None,
                    instance: str = "",
                    plug_side: bool = False) -> MetricsReport:
    """Score a schedule.

    The cost denominator is battery-side energy (charger draw times
    charging efficiency); pass ``plug_side=True`` to normalize by the
    draw itself instead.
    """
    dt = model.grid.dt
    energy_cost = expected_grid_cost(model, scen, schedule.p_grid)
    stored = float(schedule.p_chg.sum()) * dt
    if not plug_side:
        stored *= model.thermal.eta_chg
    cost = energy_cost / stored if stored > 1e-12 else float("nan")

    total_draw = float(schedule.p_chg.sum() + schedule.p_heat.sum())
    overhead = (100.0 * float(schedule.p_heat.sum()) / total_draw
                if total_draw > 1e-12 else 0.0)

    pv_used = float(scen.prob @ schedule.p_pv.T.sum(axis=1)) * dt
    pv_avail = float(scen.prob @ scen.pv_cap.sum(axis=1)) * dt
    solar = 100.0 * pv_used / pv_avail if pv_avail > 1e-12 else 0.0

    if scheme is None:
        scheme = str(schedule.meta.get("scheme", "unknown"))
    return MetricsReport(
        scheme=scheme, instance=instance,
        unmet_soc=departure_shortfall(model, schedule.soc),
        charging_cost=cost,
        overhead_rate=min(max(overhead, 0.0), 100.0),
        solar_usage_rate=min(max(solar, 0.0), 100.0),
        wall_time=schedule.wall_time)


def report_to_dict(report: MetricsReport) -> dict:
    out = asdict(report)
    if math.isnan(out["charging_cost"]):
        out["charging_cost"] = None
    return out


def report_from_dict(d: dict) -> MetricsReport:
    d = dict(d)
    if d.get("charging_cost") is None:
        d["charging_cost"] = float("nan")
    return MetricsReport(**d)


def write_metrics_json(reports, path) -> None:
    payload = [report_to_dict(r) for r in reports]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_metrics_json(path) -> list[MetricsReport]:
    with open(path) as fh:
        return [report_from_dict(d) for d in json.load(fh)]


def write_metrics_csv(reports, path) -> None:
    """Comparison table; excludes wall time so identical runs produce
    byte-identical files."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "instance", "unmet_soc", "charging_cost",
                    "overhead_rate", "solar_usage_rate"])
        for r in reports:
            cost = "" if math.isnan(r.charging_cost) \
                else f"{r.charging_cost:.6f}"
            w.writerow([r.scheme, r.instance, f"{r.unmet_soc:.6f}", cost,
                        f"{r.overhead_rate:.6f}",
                        f"{r.solar_usage_rate:.6f}"])
