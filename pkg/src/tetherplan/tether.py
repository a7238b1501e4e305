"""Taut straight-tether geometry: polar maps, contact stack, static/effective lengths.

Polar convention (y up)::

    x = L cos(theta) sin(phi)
    y = L sin(theta)
    z = L cos(theta) cos(phi)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CollisionError, TetherInfeasible
from .kernels import _bbox_cells, _boxes_hit_np

CONTACT_MARGIN = 0.05  # fraction of cell_size between contact point and edge
MAX_PUSHES = 8
_SEARCH_ITERS = 48
_POLE_EPS = 1e-12


@dataclass(frozen=True)
class PolarCoords:
    L: float
    theta: float
    phi: float

    def as_tuple(self):
        return (self.L, self.theta, self.phi)


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def forward_position(p, origin=(0.0, 0.0, 0.0), correction=None):
    """Cartesian point of polar ``p`` about ``origin``.

    ``correction`` is an optional ``Point3 -> Point3`` hook applied to the
    straight-tether estimate (for a sag/mechanics model); default identity.
    """
    L, th, ph = p.L, p.theta, p.phi
    if L < 0:
        raise ValueError("tether length must be non-negative")
    c = math.cos(th)
    q = (
        origin[0] + L * c * math.sin(ph),
        origin[1] + L * math.sin(th),
        origin[2] + L * c * math.cos(ph),
    )
    if correction is not None:
        q = tuple(float(v) for v in correction(q))
    return q


def inverse_position(q, origin=(0.0, 0.0, 0.0), phi_hint=0.0):
    """Polar coordinates of ``q`` about ``origin``; at the pole phi falls back to ``phi_hint``."""
    dx = q[0] - origin[0]
    dy = q[1] - origin[1]
    dz = q[2] - origin[2]
    L = math.sqrt(dx * dx + dy * dy + dz * dz)
    if L == 0.0:
        raise ValueError("zero-length tether")
    theta = math.asin(max(-1.0, min(1.0, dy / L)))
    if math.hypot(dx, dz) <= _POLE_EPS * L:
        phi = phi_hint
    else:
        phi = math.atan2(dx, dz)
    return PolarCoords(L, theta, phi)


def _dist(a, b):
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def polyline_length(points):
    return sum(_dist(points[i], points[i + 1]) for i in range(len(points) - 1))


@dataclass(frozen=True)
class TetherState:
    """Reel anchor (CP_0), environment contacts CP_1..CP_n and the UAV."""

    anchor: tuple
    uav: tuple
    contacts: tuple = ()
    phi_hint: float = 0.0
    L_total: float = field(default=float("nan"), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "anchor", tuple(float(v) for v in self.anchor))
        object.__setattr__(self, "uav", tuple(float(v) for v in self.uav))
        object.__setattr__(
            self, "contacts", tuple(tuple(float(v) for v in c) for c in self.contacts)
        )
        if math.isnan(self.L_total):
            object.__setattr__(self, "L_total", static_length(self) + _dist(self.last_vertex, self.uav))

    @property
    def last_vertex(self):
        return self.contacts[-1] if self.contacts else self.anchor

    @property
    def n_contacts(self):
        return len(self.contacts)

    def polyline(self):
        return (self.anchor,) + self.contacts + (self.uav,)

    @cached_property
    def effective(self):
        return inverse_position(self.uav, self.last_vertex, self.phi_hint)

    def signature(self):
        """Hashable summary that fixes all future tether behaviour from this state."""
        return self._signature

    @cached_property
    def _signature(self):
        last = self.last_vertex
        pole = math.hypot(self.uav[0] - last[0], self.uav[2] - last[2])
        return (self.contacts, self.phi_hint if pole <= _POLE_EPS * self.effective.L else None)


def static_length(state):
    """Wrapped length anchor -> CP_1 -> ... -> CP_n (zero without contacts)."""
    return polyline_length((state.anchor,) + state.contacts)


def effective_controls(state):
    """(L_eff, theta_eff, phi_eff) of the UAV relative to the last contact (or the reel)."""
    return state.effective


def tether_feasible(state, world):
    pts = state.polyline()
    for a, b in zip(pts[:-1], pts[1:]):
        if _dist(a, b) == 0.0 or not world.line_of_sight(a, b):
            return False
    return True


# ---------------------------------------------------------------------------
# contact placement


def _seg_seg_distance(p1, q1, p2, q2):
    """Minimum distance between segments p1-q1 and p2-q2."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    eps = 1e-18
    if a <= eps and e <= eps:
        return float(np.linalg.norm(r))
    if a <= eps:
        s, t = 0.0, min(max(f / e, 0.0), 1.0)
    else:
        c = d1 @ r
        if e <= eps:
            t, s = 0.0, min(max(-c / a, 0.0), 1.0)
        else:
            b = d1 @ d2
            den = a * e - b * b
            s = min(max((b * f - c * e) / den, 0.0), 1.0) if den > eps else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t, s = 0.0, min(max(-c / a, 0.0), 1.0)
            elif t > 1.0:
                t, s = 1.0, min(max((b - c) / a, 0.0), 1.0)
    return float(np.linalg.norm(p1 + d1 * s - (p2 + d2 * t)))


def _blocking_cells(world, a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cells = _bbox_cells(world.occupied, world.cell_size, a, b)
    if len(cells) == 0:
        return cells
    hit = _boxes_hit_np(a, b - a, (cells * world.cell_size).astype(np.float64), world.cell_size)
    return cells[hit]


def _solid(world, cell):
    return not world.is_free(cell)


def _edge_contact(world, edge, margin):
    """Contact point for a convex cell edge, or None if the edge is not convex.

    ``edge`` is ``(axis, i, j, k)`` with ``(i, j, k)`` the lower grid vertex.
    The point is the edge midpoint pushed ``margin`` outward along the
    bisector of the free quadrant.
    """
    axis, vertex = edge[0], edge[1:]
    p_ax, q_ax = [a for a in range(3) if a != axis]
    solid = []
    for dp in (-1, 0):
        for dq in (-1, 0):
            cell = list(vertex)
            cell[p_ax] += dp
            cell[q_ax] += dq
            if _solid(world, cell):
                solid.append((dp, dq))
    if len(solid) != 1:
        return None
    dp, dq = solid[0]
    s = world.cell_size
    point = np.asarray(vertex, dtype=np.float64) * s
    point[axis] += 0.5 * s
    off = margin * s / math.sqrt(2.0)
    point[p_ax] += off if dp == -1 else -off
    point[q_ax] += off if dq == -1 else -off
    return tuple(float(v) for v in point)


def _cell_edges(cell):
    for axis in range(3):
        p_ax, q_ax = [a for a in range(3) if a != axis]
        for u in (0, 1):
            for v in (0, 1):
                vtx = list(cell)
                vtx[p_ax] += u
                vtx[q_ax] += v
                yield (axis, *vtx)


def _edge_segment(world, edge):
    s = world.cell_size
    a = np.asarray(edge[1:], dtype=np.float64) * s
    b = a.copy()
    b[edge[0]] += s
    return a, b


def _place_contact(world, vertex, graze_a, graze_b, blocked_b, margin):
    """Pick the convex edge nearest the grazing cord and return its contact point."""
    cells = _blocking_cells(world, vertex, blocked_b)
    edges = {e for c in cells for e in _cell_edges(tuple(int(v) for v in c))}
    ga = np.asarray(graze_a, dtype=np.float64)
    gb = np.asarray(graze_b, dtype=np.float64)
    ranked = []
    for e in edges:
        point = _edge_contact(world, e, margin)
        if point is None:
            continue
        ea, eb = _edge_segment(world, e)
        ranked.append((_seg_seg_distance(ga, gb, ea, eb), e, point))
    ranked.sort()
    for _, _, point in ranked:
        if _dist(point, vertex) < 1e-9:
            continue
        if world.point_free(point) and world.line_of_sight(vertex, point):
            return point
    return None


def _push(world, contacts, anchor, old, new, margin):
    for _ in range(MAX_PUSHES):
        vertex = contacts[-1] if contacts else anchor
        if world.line_of_sight(new, vertex):
            return contacts
        if world.line_of_sight(old, vertex):
            o = np.asarray(old, dtype=np.float64)
            n = np.asarray(new, dtype=np.float64)
            lo, hi = 0.0, 1.0
            for _ in range(_SEARCH_ITERS):
                mid = 0.5 * (lo + hi)
                if world.line_of_sight(o + (n - o) * mid, vertex):
                    lo = mid
                else:
                    hi = mid
            graze = o + (n - o) * lo
            blocked = o + (n - o) * hi
        else:
            graze = blocked = np.asarray(new, dtype=np.float64)
        point = _place_contact(world, vertex, vertex, graze, blocked, margin)
        if point is None:
            raise TetherInfeasible("tether infeasible: no valid contact vertex found")
        contacts = contacts + (point,)
    raise TetherInfeasible("tether infeasible: contact push limit reached")


def update_contacts(state, new_uav, world, margin=CONTACT_MARGIN):
    """Move the UAV by one small step and relax/push tether contacts.

    1. relax: pop CP_n while the vertex before it is visible from the UAV;
    2. push: if the last vertex is hidden, wrap the tether on the convex
       obstacle edge that first blocks the cord;
    3. recompute the total length.
    """
    new_uav = tuple(float(v) for v in new_uav)
    if _dist(new_uav, state.uav) > world.cell_size * (1.0 + 1e-9):
        raise ValueError("update step exceeds one cell; use advance()")
    if not world.point_free(new_uav):
        raise CollisionError(f"uav position {new_uav} is in collision")
    contacts = state.contacts
    while contacts:
        before = contacts[-2] if len(contacts) > 1 else state.anchor
        # the cord only straightens if the region it sweeps is clear
        if world.line_of_sight(new_uav, before) and world.sweep_free(before, contacts[-1], new_uav):
            contacts = contacts[:-1]
        else:
            break
    contacts = _push(world, contacts, state.anchor, state.uav, new_uav, margin)
    last = contacts[-1] if contacts else state.anchor
    if _dist(last, new_uav) == 0.0:
        raise TetherInfeasible("tether infeasible: uav on a contact point")
    eff = inverse_position(new_uav, last, state.phi_hint)
    L_total = polyline_length((state.anchor,) + contacts) + eff.L
    return TetherState(state.anchor, new_uav, contacts, eff.phi, L_total)


def substeps(a, b, cell_size):
    """Points strictly after ``a`` up to ``b`` spaced at most one cell apart.

    Uses ``(a*(n-i) + b*i)/n`` so the reverse move visits bit-identical points.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = max(1, math.ceil(float(np.linalg.norm(b - a)) / cell_size - 1e-9))
    pts = [tuple(float(v) for v in (a * (n - i) + b * i) / n) for i in range(1, n)]
    return pts + [tuple(float(v) for v in b)]


def advance(state, target, world, margin=CONTACT_MARGIN):
    for p in substeps(state.uav, target, world.cell_size):
        state = update_contacts(state, p, world, margin)
    return state


def initial_state(anchor, uav, world):
    if not world.point_free(anchor):
        raise CollisionError("tether anchor is in collision")
    if not world.line_of_sight(anchor, uav):
        raise TetherInfeasible("tether infeasible: no line of sight from reel to start")
    if _dist(anchor, uav) == 0.0:
        raise ValueError("zero-length tether")
    eff = inverse_position(uav, anchor)
    return TetherState(anchor, uav, (), eff.phi)


def localize(L_total, theta, phi, anchor, contacts=(), correction=None):
    """Absolute UAV position from reel length and effective angles.

    ``L_total`` is the paid-out length; the wrapped part is subtracted so the
    effective segment is measured from the last contact.  Returns
    ``(relative, absolute)`` where ``relative`` is in the last-contact frame.
    """
    if not -math.pi / 2 <= theta <= math.pi / 2:
        raise ValueError("theta must lie in [-pi/2, pi/2]")
    contacts = tuple(tuple(float(v) for v in c) for c in contacts)
    wrapped = polyline_length((tuple(anchor),) + contacts)
    L_eff = L_total - wrapped
    if L_eff < 0:
        raise ValueError("tether length shorter than the wrapped portion")
    rel = forward_position(PolarCoords(L_eff, theta, phi), (0.0, 0.0, 0.0), correction)
    last = contacts[-1] if contacts else tuple(anchor)
    absolute = tuple(last[i] + rel[i] for i in range(3))
    return rel, absolute
