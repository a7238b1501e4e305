"""Command-line front end.

    tetherplan plan --scenario indoor_manipulability --out out/indoor
    tetherplan simulate --scenario indoor_manipulability --out out/indoor --plot
    tetherplan localize 2.5 0.1 1.2 --anchor 0 0 0 --contacts contacts.json
    tetherplan batch --out out/all

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path as FsPath

from . import __version__, io
from .errors import ConfigError, TetherPlanError
from .planner import plan as run_planner
from .plot import render_svg
from .risk import ELEMENTS
from .sim import simulate
from .tether import localize

log = logging.getLogger("tetherplan")

PLAN_FILE = "plan.json"
TRAJECTORY_FILE = "trajectory.csv"
METRICS_FILE = "metrics.json"
CONTACTS_FILE = "contacts.json"
PLOT_FILE = "trajectory.svg"


def _setup_logging():
    level = os.environ.get("TETHERPLAN_LOG", "WARNING").upper()
    if level.isdigit():
        level = int(level)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _out_dir(args, scenario):
    return FsPath(args.out) if args.out else scenario.out_dir


def _do_plan(scenario, out):
    world = scenario.world
    result = run_planner(world, scenario.reward_map, scenario.weights, world.start, world.anchor,
                         scenario.planner)
    path = out / PLAN_FILE
    io.save_plan(path, result, world, scenario.name)
    return result, path


def _plan_summary(scenario, result, path):
    lines = [
        f"scenario     {scenario.name}",
        f"waypoints    {len(result.path)}",
        f"reward       {result.reward:.6g}",
        f"risk         {result.risk:.6g}",
        f"utility      {result.utility:.6g}",
        f"contacts     {result.terminal_tether.n_contacts}",
        "risk breakdown:",
    ]
    bd = result.breakdown.as_dict()
    lines += [f"  {name:<14}{bd[name]:.6g}" for name in ELEMENTS]
    lines.append(f"plan written to {path}")
    return "\n".join(lines)


def cmd_plan(args):
    scenario = io.load_scenario(args.scenario, args.out, args.seed)
    result, path = _do_plan(scenario, _out_dir(args, scenario))
    print(_plan_summary(scenario, result, path))
    return 0


def _contacts_doc(trajectory):
    stacks = []
    prev = None
    for step, t in enumerate(trajectory.tethers):
        if t.contacts != prev:
            stacks.append({"from_step": step, "contacts": [list(c) for c in t.contacts]})
            prev = t.contacts
    return {
        "anchor": list(trajectory.tethers[0].anchor),
        "events": [{"step": s, "event": e, "point": list(p)} for s, e, p in trajectory.contact_events],
        "stacks": stacks,
    }


def _do_simulate(scenario, out, plan_path=None, plot=False, noise=None):
    world = scenario.world
    plan_path = FsPath(plan_path) if plan_path else out / PLAN_FILE
    result = io.load_plan(plan_path, world, scenario.weights)
    config = scenario.sim
    if noise is not None:
        config = dataclasses.replace(config, noise=float(noise))
    traj, metrics = simulate(result, world, config, scenario.gains, scenario.reward_map,
                             scenario.weights)
    out.mkdir(parents=True, exist_ok=True)
    io.atomic_write_text(out / TRAJECTORY_FILE, traj.to_csv())
    io.write_json(out / METRICS_FILE, metrics.as_dict())
    io.write_json(out / CONTACTS_FILE, _contacts_doc(traj))
    if plot:
        io.atomic_write_text(out / PLOT_FILE, render_svg(world, result, traj, title=scenario.name))
    return metrics


def cmd_simulate(args):
    scenario = io.load_scenario(args.scenario, args.out, args.seed)
    out = _out_dir(args, scenario)
    metrics = _do_simulate(scenario, out, args.plan, args.plot, args.noise)
    for k, v in metrics.as_dict().items():
        print(f"{k:<24}{v:.6g}" if isinstance(v, float) else f"{k:<24}{v}")
    print(f"outputs written to {out}")
    return 0


def _read_contacts(path):
    try:
        doc = json.loads(FsPath(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    contacts = doc.get("contacts", doc) if isinstance(doc, dict) else doc
    try:
        return [tuple(float(v) for v in c) for c in contacts]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: contacts must be a list of [x, y, z]") from exc


def cmd_localize(args):
    contacts = _read_contacts(args.contacts) if args.contacts else []
    if not math.isfinite(args.L) or args.L < 0:
        raise ConfigError("L must be a non-negative number")
    try:
        rel, absolute = localize(args.L, args.theta, args.phi, tuple(args.anchor), contacts)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print("relative " + " ".join(repr(v) for v in rel))
    print("absolute " + " ".join(repr(v) for v in absolute))
    return 0


def _batch_one(ref, out_root, seed):
    scenario = io.load_scenario(ref, None, seed)
    out = FsPath(out_root) / scenario.name if out_root else scenario.out_dir
    result, _ = _do_plan(scenario, out)
    metrics = _do_simulate(scenario, out)
    return scenario.name, {"contacts": result.terminal_tether.n_contacts,
                           "utility": result.utility, **metrics.as_dict()}


def cmd_batch(args):
    refs = args.scenario or io.bundled_scenarios()
    for ref in refs:
        io.resolve_scenario_path(ref)
    summary = {}
    failed = False
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        futures = {ref: pool.submit(_batch_one, ref, args.out, args.seed) for ref in refs}
        for ref, fut in futures.items():
            try:
                name, row = fut.result()
            except TetherPlanError as exc:
                failed = True
                summary[ref] = {"error": str(exc)}
                print(f"{ref}: FAILED ({exc})")
                continue
            summary[name] = row
            print(f"{name}: contacts {row['contacts']}, utility {row['utility']:.6g}, "
                  f"accuracy {row['flight_accuracy']:.3g} m")
    if args.out:
        io.write_json(FsPath(args.out) / "batch_summary.json", summary)
    return 1 if failed else 0


def build_parser():
    p = argparse.ArgumentParser(prog="tetherplan", description="Risk-aware tethered UAV assistant planner")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("plan", help="plan a path for a scenario")
    sp.add_argument("--scenario", required=True, help="scenario file or bundled scenario name")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_plan)

    ss = sub.add_parser("simulate", help="fly a saved plan in the kinematic simulator")
    ss.add_argument("--scenario", required=True)
    ss.add_argument("--plan", help="plan file (default: OUT/plan.json)")
    ss.add_argument("--out", help="output directory")
    ss.add_argument("--seed", type=int)
    ss.add_argument("--noise", type=float, help="per-axis position noise (m), overrides the scenario")
    ss.add_argument("--plot", action="store_true", help="also write an SVG slice plot")
    ss.set_defaults(func=cmd_simulate)

    sl = sub.add_parser("localize", help="UAV position from reel length and tether angles")
    sl.add_argument("L", type=float, help="paid-out tether length (m)")
    sl.add_argument("theta", type=float, help="elevation (rad)")
    sl.add_argument("phi", type=float, help="azimuth (rad)")
    sl.add_argument("--anchor", type=float, nargs=3, default=(0.0, 0.0, 0.0), metavar=("X", "Y", "Z"))
    sl.add_argument("--contacts", help="JSON file with a list of contact points")
    sl.set_defaults(func=cmd_localize)

    sb = sub.add_parser("batch", help="plan and simulate several scenarios")
    sb.add_argument("--scenario", action="append", help="repeatable; default: all bundled scenarios")
    sb.add_argument("--out", help="output root directory")
    sb.add_argument("--seed", type=int)
    sb.add_argument("--jobs", type=int, default=None)
    sb.set_defaults(func=cmd_batch)
    return p


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TetherPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
