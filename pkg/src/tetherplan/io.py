"""Versioned JSON file formats: world, score, risk weights, scenario, plan.

All paths inside a file are resolved relative to that file.  Writes go to a
temporary file in the destination directory and are renamed into place.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path as FsPath

import numpy as np

from .errors import ConfigError
from .motion import DEFAULT_SINGULARITY, PidGains
from .planner import PlannerConfig, PlanResult
from .reward import AffordancePose, build_hemisphere
from .risk import Path, RiskWeights, path_risk
from .sim import SimConfig
from .world import GridWorld

WORLD_SCHEMA = "tetherplan/world@1"
SCORES_SCHEMA = "tetherplan/scores@1"
RISK_SCHEMA = "tetherplan/risk@1"
SCENARIO_SCHEMA = "tetherplan/scenario@1"
PLAN_SCHEMA = "tetherplan/plan@1"


def data_dir():
    return FsPath(str(resources.files("tetherplan") / "data"))


def bundled_scenarios():
    return sorted(p.stem for p in (data_dir() / "scenarios").glob("*.json"))


def _read_json(path, schema):
    path = FsPath(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if doc.get("schema") != schema:
        raise ConfigError(f"{path}: expected schema {schema!r}, got {doc.get('schema')!r}")
    return doc


def atomic_write_text(path, text):
    path = FsPath(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, doc):
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


# -- world -------------------------------------------------------------------


def _box_cells(box, dims, what):
    lo = [int(v) for v in box["min"]]
    hi = [int(v) for v in box["max"]]
    if any(l > h for l, h in zip(lo, hi)):
        raise ConfigError(f"{what} box has min > max: {box}")
    if any(l < 0 or h >= n for l, h, n in zip(lo, hi, dims)):
        raise ConfigError(f"{what} box outside the grid: {box}")
    return (slice(lo[0], hi[0] + 1), slice(lo[1], hi[1] + 1), slice(lo[2], hi[2] + 1))


def world_from_dict(doc, base_dir="."):
    try:
        dims = tuple(int(v) for v in doc["dims"])
        cell_size = float(doc["cell_size"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"world needs dims and cell_size ({exc})") from exc
    if len(dims) != 3 or min(dims) < 1:
        raise ConfigError("dims must be three positive integers")
    occ = np.zeros(dims, dtype=bool)
    for c in doc.get("occupied", []):
        c = tuple(int(v) for v in c)
        if not all(0 <= a < n for a, n in zip(c, dims)):
            raise ConfigError(f"occupied cell {c} outside dims {dims}")
        occ[c] = True
    for box in doc.get("boxes", []):
        occ[_box_cells(box, dims, "obstacle")] = True
    labels = None
    access = {}
    try:
        if doc.get("voids"):
            labels = np.full(dims, -1, dtype=np.int64)
            for void in doc["voids"]:
                vid = int(void["id"])
                for box in void.get("boxes", []):
                    sl = _box_cells(box, dims, f"void {vid}")
                    region = labels[sl]
                    region[~occ[sl]] = vid
                for c in void.get("cells", []):
                    c = tuple(int(v) for v in c)
                    if not all(0 <= a < n for a, n in zip(c, dims)):
                        raise ConfigError(f"void {vid} cell {c} outside dims {dims}")
                    if not occ[c]:
                        labels[c] = vid
        for e in doc.get("access", []):
            access[(int(e["from"]), int(e["to"]))] = float(e["difficulty"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed voids or access entries ({exc!r})") from exc
    affordances = {}
    for name, a in doc.get("affordances", {}).items():
        a = dict(a)
        if "scores" in a:
            a["scores"] = str((FsPath(base_dir) / a["scores"]).resolve())
        affordances[name] = a
    world = GridWorld(
        occ,
        cell_size,
        void_labels=labels,
        access=access,
        anchor=tuple(float(v) for v in doc["anchor"]) if "anchor" in doc else None,
        start=tuple(int(v) for v in doc["start"]) if "start" in doc else None,
        affordances=affordances,
        name=doc.get("name", "world"),
    )
    if world.start is not None and not world.is_free(world.start):
        raise ConfigError(f"start cell {world.start} is not free")
    if world.anchor is not None and not world.point_free(world.anchor):
        raise ConfigError(f"anchor {world.anchor} is not in free space")
    return world


def load_world(path):
    doc = _read_json(path, WORLD_SCHEMA)
    return world_from_dict(doc, FsPath(path).parent)


def world_hash(world):
    h = hashlib.sha256()
    h.update(repr(world.dims).encode())
    h.update(repr(world.cell_size).encode())
    h.update(np.packbits(world.occupied).tobytes())
    h.update(world.void_labels.astype("<i8").tobytes())
    h.update(repr(sorted(world.access.items())).encode())
    h.update(repr(world.anchor).encode())
    h.update(repr(world.start).encode())
    return h.hexdigest()


# -- scores / risk -------------------------------------------------------------


def load_scores(path):
    doc = _read_json(path, SCORES_SCHEMA)
    metrics = doc.get("metrics")
    if not isinstance(metrics, list) or len(metrics) != 30:
        raise ConfigError(f"{path}: 'metrics' must list 30 values")
    return doc


def load_reward_map(world, affordance, scores_path=None, require_poi_los=False):
    if affordance not in world.affordances:
        raise ConfigError(f"world has no affordance named {affordance!r}")
    entry = world.affordances[affordance]
    scores_path = scores_path or entry.get("scores")
    if scores_path is None:
        raise ConfigError(f"no score file for affordance {affordance!r}")
    doc = load_scores(scores_path)
    pose_doc = {**doc.get("pose", {}), **{k: entry[k] for k in ("center", "forward", "radius") if k in entry}}
    try:
        pose = AffordancePose(tuple(pose_doc["center"]), tuple(pose_doc["forward"]), float(pose_doc["radius"]))
    except KeyError as exc:
        raise ConfigError(f"affordance {affordance!r} pose is missing {exc}") from exc
    return build_hemisphere(pose, doc["metrics"], require_poi_los=require_poi_los)


def risk_from_dict(doc):
    doc = {k: v for k, v in doc.items() if k != "schema"}
    return RiskWeights.from_dict(doc)


def load_risk(path):
    return risk_from_dict(_read_json(path, RISK_SCHEMA))


# -- scenario ------------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    path: FsPath
    world: GridWorld
    affordance: str
    reward_map: object
    weights: RiskWeights
    gains: PidGains
    sim: SimConfig
    planner: PlannerConfig
    out_dir: FsPath
    singularity: float = DEFAULT_SINGULARITY


def resolve_scenario_path(ref):
    p = FsPath(ref)
    if p.suffix == ".json" or p.exists():
        return p
    bundled = data_dir() / "scenarios" / f"{ref}.json"
    if bundled.is_file():
        return bundled
    raise ConfigError(f"scenario not found: {ref}")


def _pick(cls, doc, what):
    known = {f.name for f in fields(cls)}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown {what} fields: {sorted(extra)}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {what}: {exc}") from exc


def load_scenario(ref, out_dir=None, seed=None):
    path = resolve_scenario_path(ref)
    doc = _read_json(path, SCENARIO_SCHEMA)
    base = path.parent
    if "world" not in doc or "affordance" not in doc:
        raise ConfigError(f"{path}: scenario needs 'world' and 'affordance'")
    world = load_world(base / doc["world"])
    if world.anchor is None or world.start is None:
        raise ConfigError(f"{path}: world must define anchor and start")
    planner_doc = dict(doc.get("planner", {}))
    require_los = bool(planner_doc.pop("require_poi_los", False))
    scores = doc.get("scores")
    reward_map = load_reward_map(
        world, doc["affordance"], str(base / scores) if scores else None, require_los
    )
    risk = doc.get("risk", {})
    weights = load_risk(base / risk) if isinstance(risk, str) else risk_from_dict(risk)
    ctrl = dict(doc.get("controller", {}))
    singularity = float(ctrl.pop("singularity", DEFAULT_SINGULARITY))
    gains = _pick(PidGains, ctrl, "controller")
    sim_doc = dict(doc.get("sim", {}))
    sim_doc.setdefault("singularity", singularity)
    if seed is not None:
        sim_doc["seed"] = int(seed)
    sim = _pick(SimConfig, sim_doc, "sim")
    planner = _pick(PlannerConfig, planner_doc, "planner")
    name = doc.get("name", path.stem)
    out = FsPath(out_dir) if out_dir else FsPath(doc.get("out", f"out/{name}"))
    return Scenario(name, path, world, doc["affordance"], reward_map, weights, gains, sim,
                    planner, out, singularity)


# -- plan files ----------------------------------------------------------------


def _vec(v):
    return [float(x) for x in v]


def plan_to_dict(result, world, scenario_name=""):
    states = result.path.states
    waypoints, events = [], []
    prev = ()
    for i, st in enumerate(states):
        contacts = st.tether.contacts
        k = 0
        while k < min(len(prev), len(contacts)) and prev[k] == contacts[k]:
            k += 1
        events += [{"waypoint": i, "event": "pop", "point": _vec(c)} for c in reversed(prev[k:])]
        events += [{"waypoint": i, "event": "push", "point": _vec(c)} for c in contacts[k:]]
        prev = contacts
        wp = {"cell": list(st.cell), "xyz": _vec(st.position), "n_contacts": len(contacts),
              "contacts": [_vec(c) for c in contacts]}
        if result.increments:
            wp["risk_increment"] = result.increments[i].as_dict()
        waypoints.append(wp)
    return {
        "schema": PLAN_SCHEMA,
        "scenario": scenario_name,
        "world_hash": world_hash(world),
        "anchor": _vec(states[0].tether.anchor),
        "start": list(states[0].cell),
        "waypoints": waypoints,
        "contact_events": events,
        "terminal_contacts": [_vec(c) for c in states[-1].tether.contacts],
        "reward": result.reward,
        "risk": {"total": result.risk, "breakdown": result.breakdown.as_dict()},
        "utility": result.utility,
    }


def save_plan(path, result, world, scenario_name=""):
    write_json(path, plan_to_dict(result, world, scenario_name))


def load_plan(path, world, weights):
    """Rebuild a :class:`PlanResult` by replaying the stored cells in ``world``."""
    doc = _read_json(path, PLAN_SCHEMA)
    if doc.get("world_hash") != world_hash(world):
        raise ConfigError(f"{path}: plan was made for a different world (hash mismatch)")
    cells = [tuple(w["cell"]) for w in doc["waypoints"]]
    p = Path.from_cells(world, cells, tuple(doc["anchor"]))
    total, breakdown = path_risk(p, world, weights)
    if not math.isclose(total, doc["risk"]["total"], rel_tol=1e-9, abs_tol=1e-12):
        raise ConfigError(f"{path}: stored risk does not match the scenario's risk weights")
    return PlanResult(p, total, breakdown, (), float(doc["reward"]), float(doc["utility"]))

