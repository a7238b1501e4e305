"""Path-dependent risk: four per-state elements plus six path elements, weighted sum.

Every element is a running sum of non-negative per-state increments, so a
path's total can only grow when the path is extended.
"""
from __future__ import annotations

import math
import operator
from dataclasses import dataclass, fields
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, PlanningError
from .tether import advance, initial_state, wrap_angle

ELEMENTS = (
    "distance",       # r_d: closeness to obstacles
    "visibility",     # r_v: 1 - isovist score
    "altitude",       # r_a: vertical clearance
    "singularity",    # r_s: tether elevation near the pole
    "action_length",  # R_AL
    "access",         # R_AE
    "tortuosity",     # R_T
    "tether_length",  # R_TL
    "contacts",       # R_NC
    "azimuth",        # R_A
)


@dataclass(frozen=True)
class RiskWeights:
    distance: float = 1.0
    visibility: float = 1.0
    altitude: float = 1.0
    singularity: float = 1.0
    action_length: float = 1.0
    access: float = 1.0
    tortuosity: float = 1.0
    tether_length: float = 1.0
    contacts: float = 1.0
    azimuth: float = 1.0
    d_safe: float = 1.0
    h_min: float = 0.5
    theta_sing: float = math.radians(75.0)
    L_max: float = 30.0
    isovist_rays: int = 64
    isovist_range: float | None = None

    def __post_init__(self):
        for name in ELEMENTS:
            if getattr(self, name) < 0:
                raise ConfigError(f"risk weight {name} must be non-negative")
        for name in ("d_safe", "h_min", "theta_sing", "L_max"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"risk parameter {name} must be positive")

    def vector(self):
        return self._vector

    @cached_property
    def _vector(self):
        return tuple(getattr(self, n) for n in ELEMENTS)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "theta_sing_deg" in d:
            d["theta_sing"] = math.radians(d.pop("theta_sing_deg"))
        extra = set(d) - {f.name for f in fields(cls)}
        if extra:
            raise ConfigError(f"unknown risk fields: {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"invalid risk weights: {exc}") from exc


class RiskBreakdown(NamedTuple):
    """Per-element risk totals (an immutable tuple in ``ELEMENTS`` order)."""

    distance: float = 0.0
    visibility: float = 0.0
    altitude: float = 0.0
    singularity: float = 0.0
    action_length: float = 0.0
    access: float = 0.0
    tortuosity: float = 0.0
    tether_length: float = 0.0
    contacts: float = 0.0
    azimuth: float = 0.0

    def values(self):
        return tuple(self)

    def as_dict(self):
        return dict(zip(ELEMENTS, self))

    def total(self, weights):
        t = 0.0
        for w, e in zip(weights.vector(), self):
            t += w * e
        return t

    def __add__(self, other):
        return RiskBreakdown._make(map(operator.add, self, other))

    def __sub__(self, other):
        return RiskBreakdown._make(map(operator.sub, self, other))


@dataclass(frozen=True)
class PathState:
    cell: tuple
    position: tuple
    tether: object  # TetherState


@dataclass(frozen=True)
class Path:
    states: tuple

    def __len__(self):
        return len(self.states)

    @property
    def cells(self):
        return [s.cell for s in self.states]

    @property
    def positions(self):
        return np.array([s.position for s in self.states])

    @property
    def actions(self):
        p = self.positions
        return p[1:] - p[:-1]

    @classmethod
    def from_cells(cls, world, cells, anchor):
        """Build a path through cell centers, replaying the tether along it."""
        cells = [tuple(int(v) for v in c) for c in cells]
        if not cells:
            raise PlanningError("empty path")
        pos = tuple(float(v) for v in world.cell_center(cells[0]))
        tether = initial_state(anchor, pos, world)
        states = [PathState(cells[0], pos, tether)]
        for c in cells[1:]:
            pos = tuple(float(v) for v in world.cell_center(c))
            tether = advance(tether, pos, world)
            states.append(PathState(c, pos, tether))
        return cls(tuple(states))


def validate_path(path, world):
    seen = set()
    for i, s in enumerate(path.states):
        if not world.is_free(s.cell):
            raise PlanningError(f"state {i} at {s.cell} is in collision")
        if s.cell in seen:
            raise PlanningError(f"path revisits cell {s.cell}")
        seen.add(s.cell)
        if i:
            prev = path.states[i - 1].cell
            if max(abs(a - b) for a, b in zip(prev, s.cell)) != 1:
                raise PlanningError(f"states {i - 1} and {i} are not 26-adjacent")


def state_risk(state, world, weights):
    """(r_d, r_v, r_a, r_s), each in [0, 1]."""
    p = state.position
    cell = world._center_cell(p)
    if cell is not None and not world.occupied[cell]:
        # cell centers read the precomputed fields directly
        d = float(world.distance_field[cell])
        iso = float(world.isovist_field(weights.isovist_rays, weights.isovist_range)[cell])
        clear = float(world.clearance_field[cell])
    else:
        d = world.distance_to_obstacle(p)
        iso = world.isovist_score(p, weights.isovist_rays, weights.isovist_range)
        clear = world.vertical_clearance(p)
    r_d = max(0.0, 1.0 - d / weights.d_safe)
    r_v = min(1.0, max(0.0, 1.0 - iso))
    r_a = max(0.0, 1.0 - clear / weights.h_min)
    theta = state.tether.effective.theta
    s_sing = math.sin(weights.theta_sing)
    r_s = min(1.0, max(0.0, (math.sin(theta) - s_sing) / (1.0 - s_sing)))
    return r_d, r_v, r_a, r_s


def _norm(v):
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def step_increment(prev2, prev, state, world, weights):
    """Risk added by appending ``state`` after ``prev`` (and ``prev2``).

    ``prev``/``prev2`` may be None at the start of a path.  All returned
    terms are non-negative.
    """
    r_d, r_v, r_a, r_s = state_risk(state, world, weights)
    t = state.tether
    eff = t.effective
    tl = t.L_total / weights.L_max
    nc = float(t.n_contacts)
    al = ae = tort = az = 0.0
    if prev is not None:
        a = tuple(state.position[i] - prev.position[i] for i in range(3))
        al = _norm(a)
        ae = max(world.access_difficulty(world.void_of(prev.cell), world.void_of(state.cell)), 0.0)
        phi_prev = prev.tether.effective.phi
        az = abs(wrap_angle(eff.phi - phi_prev))
        if prev2 is not None:
            a0 = tuple(prev.position[i] - prev2.position[i] for i in range(3))
            tort = _norm(tuple(a[i] - a0[i] for i in range(3)))
    return RiskBreakdown(r_d, r_v, r_a, r_s, al, ae, tort, tl, nc, az)


def path_risk(path, world, weights):
    """Return ``(total, breakdown)`` for a path, accumulating states in order."""
    validate_path(path, world)
    acc = RiskBreakdown()
    st = path.states
    for i, s in enumerate(st):
        prev = st[i - 1] if i >= 1 else None
        prev2 = st[i - 2] if i >= 2 else None
        acc = acc + step_increment(prev2, prev, s, world, weights)
    return acc.total(weights), acc
