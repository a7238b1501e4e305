"""Deterministic discrete-time kinematic simulation of a planned path.

The UAV is a point mass whose tether-space rates integrate directly.  A
setpoint slides along each leg of the plan at ``ref_speed`` and the chosen
motion primitive tracks it; the next leg starts once the UAV is within
``tolerance`` of the current waypoint.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CollisionError, SimulationError, SingularityError, TetherInfeasible
from .motion import PidGains, PositionController, gimbal_pointing, velocity_command
from .planner import cell_reward
from .risk import PathState, RiskBreakdown, RiskWeights, step_increment
from .tether import (
    PolarCoords,
    effective_controls,
    forward_position,
    static_length,
    tether_feasible,
    update_contacts,
    wrap_angle,
)

LOG_COLUMNS = (
    "step", "t", "x", "y", "z", "L", "theta_eff", "phi_eff",
    "n_contacts", "static_len", "yaw", "pitch", "waypoint_idx",
)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.05
    primitive: str = "position"  # or "velocity"
    tolerance: float = 0.02
    max_steps: int = 50_000
    noise: float = 0.0
    seed: int = 0
    ref_speed: float = 0.3
    singularity: float = 1e-2

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.primitive not in ("position", "velocity"):
            raise ValueError(f"unknown motion primitive {self.primitive!r}")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")


@dataclass(frozen=True)
class Metrics:
    reward_collected: float
    risk_encountered: float
    planned_risk: float
    flight_accuracy: float
    contacts_peak: int
    steps: int
    max_waypoint_error: float = 0.0
    max_length_error: float = 0.0
    feasibility_violations: int = 0

    @property
    def risk_gap(self):
        if self.planned_risk == 0:
            return 0.0
        return abs(self.risk_encountered - self.planned_risk) / self.planned_risk

    def as_dict(self):
        d = dict(self.__dict__)
        d["risk_gap"] = self.risk_gap
        return d


@dataclass
class Trajectory:
    rows: list = field(default_factory=list)
    tethers: list = field(default_factory=list)
    arrivals: list = field(default_factory=list)  # (waypoint index, step, position)
    contact_events: list = field(default_factory=list)  # (step, "push"|"pop", point)

    def to_csv(self):
        """CSV text; floats use ``repr`` so values round-trip exactly."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for row in self.rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def read_csv(path):
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        out = []
        for row in r:
            out.append({k: (int(v) if k in ("step", "n_contacts", "waypoint_idx") else float(v))
                        for k, v in row.items()})
        return out


def _cross_track(p, polyline):
    if len(polyline) == 1:
        return float(np.linalg.norm(p - polyline[0]))
    a = polyline[:-1]
    d = polyline[1:] - a
    dd = np.einsum("ij,ij->i", d, d)
    t = np.clip(np.einsum("ij,ij->i", p - a, d) / dd, 0.0, 1.0)
    q = a + d * t[:, None]
    return float(np.min(np.linalg.norm(q - p, axis=1)))


def _row(step, t, tether, gimbal, wp):
    eff = effective_controls(tether)
    x, y, z = tether.uav
    return (step, t, x, y, z, tether.L_total, eff.theta, eff.phi, tether.n_contacts,
            static_length(tether), gimbal.vehicle_yaw, gimbal.camera_pitch, wp)


def _contact_diff(step, before, after, events):
    i = 0
    while i < min(len(before), len(after)) and before[i] == after[i]:
        i += 1
    for c in reversed(before[i:]):
        events.append((step, "pop", c))
    for c in after[i:]:
        events.append((step, "push", c))


def simulate(plan, world, config=None, gains=None, reward_map=None, risk_weights=None, poi=None):
    """Execute ``plan`` and return ``(trajectory, metrics)``.

    Errors (singularity, infeasible tether, collision, step limit) raise
    :class:`SimulationError` carrying the failing step index.
    """
    config = config or SimConfig()
    gains = gains or PidGains()
    risk_weights = risk_weights or RiskWeights()
    if poi is None and reward_map is not None:
        poi = reward_map.affordance.center
    rng = np.random.default_rng(config.seed)
    waypoints = plan.path.positions
    tether = plan.path.states[0].tether
    traj = Trajectory()
    s = world.cell_size

    yaw = 0.0

    def aim(uav):
        nonlocal yaw
        if poi is None:
            return gimbal_pointing(uav, np.asarray(uav) + (0.0, 0.0, 1.0), yaw)
        g = gimbal_pointing(uav, poi, yaw)
        yaw = g.vehicle_yaw
        return g

    traj.rows.append(_row(0, 0.0, tether, aim(tether.uav), 0))
    traj.tethers.append(tether)
    arrivals = [(0, tether)]
    controller = PositionController(gains)
    ref = waypoints[0].copy()
    wp = 1
    step = 0
    cross = []
    max_len_err = abs(tether.L_total - static_length(tether) - effective_controls(tether).L)
    peak = tether.n_contacts
    wp_err = 0.0

    while wp < len(waypoints):
        if step >= config.max_steps:
            raise SimulationError("max steps exceeded", step)
        step += 1
        target = waypoints[wp]
        leg = target - ref
        dist = float(np.linalg.norm(leg))
        if dist <= config.ref_speed * config.dt:
            ref = target.copy()
        else:
            ref = ref + leg * (config.ref_speed * config.dt / dist)
        uav = np.asarray(tether.uav)
        frame = tether.last_vertex
        cur = effective_controls(tether)
        try:
            if config.primitive == "position":
                rates = controller.command(cur, tuple(ref), frame, config.dt)
            else:
                gap = ref - uav
                gn = float(np.linalg.norm(gap))
                speed = min(gains.max_rates[0], gains.kp[0] * gn)
                v = gap * (speed / gn) if gn > 0 else np.zeros(3)
                rates = velocity_command(cur, v, config.singularity)
                rates = tuple(max(-m, min(m, r)) for r, m in zip(rates, gains.max_rates))
        except SingularityError as exc:
            raise SimulationError(str(exc), step) from exc
        except ValueError as exc:
            raise SimulationError(str(exc), step) from exc
        nxt = PolarCoords(
            max(cur.L + rates[0] * config.dt, 1e-9),
            min(math.pi / 2, max(-math.pi / 2, cur.theta + rates[1] * config.dt)),
            wrap_angle(cur.phi + rates[2] * config.dt),
        )
        new = np.asarray(forward_position(nxt, frame))
        if config.noise > 0:
            new = new + rng.normal(0.0, config.noise, 3)
        move = new - uav
        mn = float(np.linalg.norm(move))
        if mn > s:
            new = uav + move * (s / mn)
        try:
            updated = update_contacts(tether, new, world)
        except (CollisionError, TetherInfeasible) as exc:
            raise SimulationError(str(exc), step) from exc
        if not tether_feasible(updated, world):
            raise SimulationError("tether polyline intersects an obstacle", step)
        if updated.contacts != tether.contacts:
            _contact_diff(step, tether.contacts, updated.contacts, traj.contact_events)
            controller.reset()
        tether = updated
        peak = max(peak, tether.n_contacts)
        max_len_err = max(
            max_len_err, abs(tether.L_total - static_length(tether) - effective_controls(tether).L)
        )
        pos = np.asarray(tether.uav)
        cross.append(_cross_track(pos, waypoints))
        traj.rows.append(_row(step, step * config.dt, tether, aim(tether.uav), wp))
        traj.tethers.append(tether)
        err = float(np.linalg.norm(pos - target))
        if err <= config.tolerance and np.array_equal(ref, target):
            wp_err = max(wp_err, err)
            traj.arrivals.append((wp, step, tuple(pos)))
            arrivals.append((wp, tether))
            wp += 1
            controller.reset()

    risk = RiskBreakdown()
    planned_risk = plan.risk
    reward = plan.reward
    prev2 = prev = None
    for _, t in arrivals:
        st = PathState(world.cell_of(t.uav), t.uav, t)
        risk = risk + step_increment(prev2, prev, st, world, risk_weights)
        prev2, prev = prev, st
    if reward_map is not None:
        # rewards are per cell, so score the cell the UAV settled in
        end_cell = world.cell_of(tether.uav)
        reward = cell_reward(reward_map, world, tuple(world.cell_center(end_cell)))
    metrics = Metrics(
        reward_collected=float(reward),
        risk_encountered=risk.total(risk_weights),
        planned_risk=float(planned_risk),
        flight_accuracy=float(np.sqrt(np.mean(np.square(cross)))) if cross else 0.0,
        contacts_peak=int(peak),
        steps=step,
        max_waypoint_error=wp_err,
        max_length_error=float(max_len_err),
    )
    return traj, metrics
