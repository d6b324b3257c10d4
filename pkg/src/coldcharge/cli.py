"""Benchmark command line.

Verbs
-----
compare     run schemes on one instance; metrics table + trajectories
sweep       re-run schemes under ambient temperature shifts; slopes
scale       timing study over fleet/scenario sizes
gen-config  write a ready-to-run config.json with its CSV inputs
dump-lp     export the centralized problem in LP text format

Exit codes: 0 success, 2 usage error, 3 infeasible instance,
4 time limit hit with no feasible incumbent.

One ``--time-limit-per-vehicle`` budget drives every solver: the
centralized solve gets that many seconds per vehicle in total, the
price-coordination phase one sixth of it per vehicle solve, and
rescheduling one twelfth (the 60:10:5 split the schemes are normally
run with).
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import pathlib
import sys
import time

import numpy as np

from .baselines import run_instant_chg_heat, run_no_heat, run_smart_chg_heat
from .config import Config, ConfigError, build_instance, gen_config, load_config
from .decentral import run_decentralized
from .metrics import compute_metrics, write_metrics_csv, write_metrics_json
from .milp import ProblemError, SolveTimeout, write_lp
from .model import build_centralized, solve_centralized, write_schedule_csv
from .presets import cold_day_instance  # noqa: F401  (re-export convenience)

SCHEMES = ("tcsc-central", "tcsc-decent", "smart-heat", "instant-heat",
           "no-heat")
SWEEP_SCHEMES = ("tcsc-central", "smart-heat", "instant-heat")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_TIMEOUT = 4


class UsageError(ValueError):
    """Bad command-line arguments beyond what argparse validates."""


def _parse_schemes(text: str | None, default: tuple) -> list[str]:
    if text is None:
        return list(default)
    names = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in SCHEMES]
    if bad or not names:
        raise UsageError(
            f"unknown scheme(s) {bad or ['<empty>']}; valid: "
            + ", ".join(SCHEMES))
    return names


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        vals = [float(s) for s in text.split(",") if s.strip()]
    except ValueError as e:
        raise UsageError(f"{flag}: {e}") from e
    if not vals or not all(np.isfinite(vals)):
        raise UsageError(f"{flag}: needs a finite comma-separated list")
    return vals


def _parse_sizes(text: str) -> list[tuple[int, int | None]]:
    """'5x10,30x60' -> [(5, 10), (30, 60)]; '30' keeps the config's
    scenario count."""
    sizes = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "x" in part:
                n, w = part.split("x")
                sizes.append((int(n), int(w)))
            else:
                sizes.append((int(part), None))
        except ValueError as e:
            raise UsageError(f"--sizes: bad entry {part!r} ({e})") from e
    if not sizes or any(n < 1 or (w is not None and w < 1)
                        for n, w in sizes):
        raise UsageError("--sizes: needs entries like '5x10,30x60'")
    return sizes


def _load(args) -> Config:
    if args.config is None:
        raise UsageError("--config is required for this command")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = int(args.seed)
    if args.gap_tol is not None:
        cfg.solve.gap_tol = float(args.gap_tol)
    if args.time_limit_per_vehicle is not None:
        cfg.solve.time_limit_per_vehicle = float(args.time_limit_per_vehicle)
    return cfg


def _budget(cfg: Config, n_vehicles: int) -> tuple[float, float, float]:
    """(central total, dual per-vehicle, resched per-vehicle) seconds."""
    per = cfg.solve.time_limit_per_vehicle
    if per <= 0:
        raise UsageError("--time-limit-per-vehicle must be positive")
    return per * n_vehicles, per / 6.0, per / 12.0


def run_scheme(name: str, model, scen, cfg: Config):
    central_tl, dual_tl, resched_tl = _budget(cfg, model.n_vehicles)
    if name == "tcsc-central":
        return solve_centralized(model, scen, gap_tol=cfg.solve.gap_tol,
                                 time_limit=central_tl,
                                 rule_form=cfg.solve.rule_form)
    if name == "tcsc-decent":
        return run_decentralized(
            model, scen, gap_tol=cfg.solve.gap_tol,
            step_sizes=cfg.solve.step_sizes, n_iter=cfg.solve.n_iter,
            time_limit_per_vehicle=dual_tl,
            resched_limit_per_vehicle=resched_tl,
            rule_form=cfg.solve.rule_form)
    if name == "smart-heat":
        return run_smart_chg_heat(model, scen, time_limit=central_tl)
    if name == "instant-heat":
        return run_instant_chg_heat(model, scen)
    if name == "no-heat":
        return run_no_heat(model, scen, time_limit=central_tl)
    raise UsageError(f"unknown scheme {name!r}; valid: " + ", ".join(SCHEMES))


def _out_dir(args) -> pathlib.Path:
    out = pathlib.Path(args.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_compare(args) -> int:
    cfg = _load(args)
    schemes = _parse_schemes(args.schemes, SCHEMES)
    out = _out_dir(args)
    model, scen = build_instance(cfg)
    instance = f"n{model.n_vehicles}w{scen.n_scen}s{cfg.seed}"
    reports = []
    for name in schemes:
        sched = run_scheme(name, model, scen, cfg)
        reports.append(compute_metrics(sched, model, scen, scheme=name,
                                       instance=instance))
        write_schedule_csv(sched, model, out / f"trajectory_{name}.csv")
    write_metrics_csv(reports, out / "metrics.csv")
    write_metrics_json(reports, out / "metrics.json")
    for r in reports:
        cost = "undef" if np.isnan(r.charging_cost) else f"{r.charging_cost:7.3f}"
        print(f"{r.scheme:14s} unmet={r.unmet_soc:7.4f} cost={cost} "
              f"overhead={r.overhead_rate:6.2f}% solar={r.solar_usage_rate:6.2f}%")
    print(f"wrote {out / 'metrics.csv'}")
    return EXIT_OK


def _shifted(cfg: Config, shift: float) -> Config:
    c = copy.deepcopy(cfg)
    spec = dict(c.temperature_spec)
    spec["shift_c"] = float(spec.get("shift_c", 0.0)) + shift
    c.temperature_spec = spec
    return c


def cmd_temp_sweep(args) -> int:
    cfg = _load(args)
    schemes = _parse_schemes(args.schemes, SWEEP_SCHEMES)
    shifts = _parse_floats(args.shifts or "-9,-6,-3,0,3,6,9", "--shifts")
    out = _out_dir(args)
    rows = []
    for shift in shifts:
        model, scen = build_instance(_shifted(cfg, shift))
        for name in schemes:
            sched = run_scheme(name, model, scen, cfg)
            rep = compute_metrics(sched, model, scen, scheme=name)
            rows.append((name, shift, rep.charging_cost, rep.overhead_rate,
                         rep.unmet_soc))
            print(f"shift {shift:+5.1f}C {name:14s} "
                  f"cost={rep.charging_cost:7.3f} "
                  f"overhead={rep.overhead_rate:6.2f}%")
    with open(out / "sweep.csv", "w") as fh:
        fh.write("scheme,shift_c,charging_cost,overhead_rate,unmet_soc\n")
        for name, shift, cost, oh, unmet in rows:
            c = "" if np.isnan(cost) else f"{cost:.6f}"
            fh.write(f"{name},{shift:.1f},{c},{oh:.6f},{unmet:.6f}\n")
    with open(out / "slopes.csv", "w") as fh:
        fh.write("scheme,cost_slope_cents_per_kwh_degc,"
                 "overhead_slope_pp_degc\n")
        for name in schemes:
            pts = [(s, c, o) for nm, s, c, o, _ in rows
                   if nm == name and not np.isnan(c)]
            sh = np.array([p[0] for p in pts])
            cs = np.polyfit(sh, [p[1] for p in pts], 1)[0] if len(pts) > 1 \
                else float("nan")
            os_ = np.polyfit(sh, [p[2] for p in pts], 1)[0] if len(pts) > 1 \
                else float("nan")
            fh.write(f"{name},{cs:.6f},{os_:.6f}\n")
            print(f"{name:14s} cost slope {cs:+.4f} c/kWh/degC, "
                  f"overhead slope {os_:+.4f} pp/degC")
    print(f"wrote {out / 'sweep.csv'} and {out / 'slopes.csv'}")
    return EXIT_OK


def _resized(cfg: Config, n: int, w: int | None) -> Config:
    c = copy.deepcopy(cfg)
    fleet = dict(c.fleet_spec)
    fleet.pop("vehicles", None)
    fleet["n_vehicles"] = n
    c.fleet_spec = fleet
    if w is not None:
        c.n_scen = w
    return c


def cmd_scale(args) -> int:
    cfg = _load(args)
    sizes = _parse_sizes(args.sizes or "1x2,5x10,30x60")
    out = _out_dir(args)
    base_model, _ = build_instance(cfg)
    pg_frac = cfg.pg_max / base_model.connected_capacity()
    rows = []
    for n, w in sizes:
        c = _resized(cfg, n, w)
        model, scen = build_instance(c)
        # Keep congestion comparable across sizes: the grid limit stays
        # the same fraction of the fleet's connected power as in the
        # reference config.
        model = dataclasses.replace(
            model, pg_max=round(pg_frac * model.connected_capacity(), 6))
        for name in ("tcsc-central", "tcsc-decent"):
            t0 = time.perf_counter()
            status, obj, gap = "ok", float("nan"), float("nan")
            try:
                sched = run_scheme(name, model, scen, cfg)
                obj, gap = sched.objective, sched.mip_gap
                status = sched.solver_status
            except SolveTimeout:
                status = "timeout-no-incumbent"
            except ProblemError as e:
                status = f"infeasible ({e})"
            wall = time.perf_counter() - t0
            rows.append((n, scen.n_scen, name, status, wall, obj, gap))
            print(f"n={n:3d} w={scen.n_scen:3d} {name:14s} "
                  f"status={status} wall={wall:7.1f}s obj={obj:.1f}")
    with open(out / "timing.csv", "w") as fh:
        fh.write("n_vehicles,n_scen,scheme,status,wall_s,objective,"
                 "mip_gap\n")
        for n, w, name, status, wall, obj, gap in rows:
            o = "" if np.isnan(obj) else f"{obj:.4f}"
            g = "" if np.isnan(gap) else f"{gap:.2e}"
            fh.write(f"{n},{w},{name},{status},{wall:.2f},{o},{g}\n")
    print(f"wrote {out / 'timing.csv'}")
    return EXIT_OK


def cmd_gen_config(args) -> int:
    out = _out_dir(args)
    path = gen_config(out, seed=args.seed if args.seed is not None else 11,
                      n_vehicles=args.n_vehicles, n_scen=args.n_scen)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_dump_lp(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    model, scen = build_instance(cfg)
    problem, _ = build_centralized(model, scen,
                                   rule_form=cfg.solve.rule_form)
    path = out / "model.lp"
    write_lp(problem, path)
    print(f"wrote {path} ({problem.lp.n_rows} rows, "
          f"{problem.lp.n_vars} vars, {problem.binaries.size} binaries)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="coldcharge",
        description="Solar EV charging station scheduling benchmarks")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="instance config JSON")
        sp.add_argument("--seed", type=int, help="override config seed")
        sp.add_argument("--gap-tol", type=float, dest="gap_tol",
                        help="MIP relative gap tolerance")
        sp.add_argument("--time-limit-per-vehicle", type=float,
                        dest="time_limit_per_vehicle",
                        help="seconds of central solve budget per vehicle "
                             "(coordination phases get 1/6 and 1/12)")
        sp.add_argument("--out-dir", dest="out_dir",
                        help="output directory (default: current)")

    sp = sub.add_parser("compare", help="run schemes on one instance")
    common(sp)
    sp.add_argument("--schemes", help="comma list: " + ",".join(SCHEMES))
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("sweep", help="ambient temperature sensitivity")
    common(sp)
    sp.add_argument("--schemes", help="comma list (default central + "
                                      "heated baselines)")
    sp.add_argument("--shifts", help="comma list of degC shifts "
                                     "(default -9,-6,-3,0,3,6,9)")
    sp.set_defaults(func=cmd_temp_sweep)

    sp = sub.add_parser("scale", help="fleet/scenario size timing study")
    common(sp)
    sp.add_argument("--sizes", help="comma list of NxW sizes "
                                    "(default 1x2,5x10,30x60)")
    sp.set_defaults(func=cmd_scale)

    sp = sub.add_parser("gen-config", help="write a runnable example "
                                           "config with its CSV inputs")
    sp.add_argument("--out-dir", dest="out_dir", required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--n-vehicles", type=int, default=2)
    sp.add_argument("--n-scen", type=int, default=10)
    sp.set_defaults(func=cmd_gen_config)

    sp = sub.add_parser("dump-lp", help="export centralized model as LP")
    common(sp)
    sp.set_defaults(func=cmd_dump_lp)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SolveTimeout as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_TIMEOUT
    except ProblemError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
