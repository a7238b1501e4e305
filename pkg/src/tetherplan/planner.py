"""Risk-aware reward-maximizing planner.

Label-correcting best-first search over (cell, incoming move, tether
signature).  Labels are popped in order of total risk, so the first label
popped at a cell is that cell's minimum-risk path; utility is
``reward / (risk + r0)`` and the search stops once no remaining label can
beat the best utility found.
"""
from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import CollisionError, PlanningError, TetherInfeasible
from .risk import Path, PathState, RiskBreakdown, path_risk, step_increment
from .tether import advance, initial_state

log = logging.getLogger(__name__)

DEFAULT_LABEL_BUDGET = 200_000


@dataclass(frozen=True)
class PlannerConfig:
    r0: float = 1.0
    label_budget: int = DEFAULT_LABEL_BUDGET
    reward_mode: str = "terminal"  # or "discounted"
    discount: float = 0.9

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("utility regularizer r0 must be positive")
        if self.reward_mode not in ("terminal", "discounted"):
            raise ValueError(f"unknown reward mode {self.reward_mode!r}")
        if not 0 < self.discount < 1:
            raise ValueError("discount must lie in (0, 1)")


@dataclass(frozen=True)
class PlanResult:
    path: Path
    risk: float
    breakdown: RiskBreakdown
    increments: tuple
    reward: float
    utility: float
    labels: int = 0

    @property
    def terminal_tether(self):
        return self.path.states[-1].tether


class _Label:
    __slots__ = ("state", "prev", "parent", "move", "acc", "total", "visited", "inc", "reward", "depth")

    def __init__(self, state, prev, parent, move, acc, total, visited, inc, reward, depth):
        self.state = state
        self.prev = prev
        self.parent = parent
        self.move = move
        self.acc = acc
        self.total = total
        self.visited = visited
        self.inc = inc
        self.reward = reward
        self.depth = depth

    def key(self):
        return (self.state.cell, self.move, self.state.tether.signature())


def cell_reward(qmap, world, position):
    if np.array_equal(np.asarray(position), np.asarray(qmap.affordance.center)):
        return 0.0
    return qmap.quality(position, world)


def _better(cand, best):
    """Order candidates by utility, then lower risk, then lexicographic cell."""
    if best is None:
        return True
    u, r, c = cand
    bu, br, bc = best
    if u != bu:
        return u > bu
    if r != br:
        return r < br
    return c < bc


def _utility(reward, risk, config):
    return reward / (risk + config.r0)


def _start_state(world, start, anchor):
    start = tuple(int(v) for v in start)
    if not world.is_free(start):
        raise CollisionError(f"start cell {start} is in collision")
    pos = tuple(float(v) for v in world.cell_center(start))
    return PathState(start, pos, initial_state(anchor, pos, world))


def _result(label, weights, config):
    chain = []
    while label is not None:
        chain.append(label)
        label = label.parent
    chain.reverse()
    last = chain[-1]
    path = Path(tuple(l.state for l in chain))
    return PlanResult(
        path=path,
        risk=last.total,
        breakdown=last.acc,
        increments=tuple(l.inc for l in chain),
        reward=last.reward,
        utility=_utility(last.reward, last.total, config),
    )


def _search(world, qmap, weights, start, anchor, config, goal=None):
    index = {c: i for i, c in enumerate(world.free_cells)}
    s0 = _start_state(world, start, anchor)
    inc0 = step_increment(None, None, s0, world, weights)
    acc0 = RiskBreakdown() + inc0
    discounted = config.reward_mode == "discounted"
    s = world.cell_size
    centers = {c: ((c[0] + 0.5) * s, (c[1] + 0.5) * s, (c[2] + 0.5) * s) for c in index}
    memo = {}

    def step_tether(tether, pos):
        # the signature plus the UAV position fixes the tether's next state
        k = (tether.signature(), tether.uav, pos)
        if k not in memo:
            try:
                memo[k] = advance(tether, pos, world)
            except TetherInfeasible:
                memo[k] = None
        return memo[k]

    def reward_of(state, parent, depth):
        r = cell_reward(qmap, world, state.position) if qmap is not None else 0.0
        if discounted:
            return (parent.reward if parent else 0.0) + config.discount ** depth * r
        return r

    root = _Label(s0, None, None, None, acc0, acc0.total(weights), 1 << index[s0.cell], inc0, 0.0, 0)
    root.reward = reward_of(s0, None, 0)
    counter = itertools.count()
    heap = [(root.total, s0.cell, next(counter), root)]
    best_at_key = {root.key(): root.total}
    settled = set()
    reached = {}
    best, best_label = None, None
    max_reward = qmap.max_reward if qmap is not None else 0.0
    n_labels = 1

    while heap:
        total, _, _, lab = heapq.heappop(heap)
        key = lab.key()
        if key in settled:
            continue
        settled.add(key)
        cell = lab.state.cell
        if cell not in reached:
            reached[cell] = lab
            if goal is not None and cell == goal:
                return lab, n_labels
            if goal is None:
                cand = (_utility(lab.reward, total, config), total, cell)
                if _better(cand, best):
                    best, best_label = cand, lab
        if goal is None and best is not None and not discounted:
            if _utility(max_reward, total, config) < best[0]:
                break
        for nb in world.neighbors(cell):
            bit = 1 << index[nb]
            if lab.visited & bit:
                continue
            pos = centers[nb]
            tether = step_tether(lab.state.tether, pos)
            if tether is None:
                continue
            st = PathState(nb, pos, tether)
            inc = step_increment(lab.prev, lab.state, st, world, weights)
            acc = lab.acc + inc
            t = acc.total(weights)
            move = (nb[0] - cell[0], nb[1] - cell[1], nb[2] - cell[2])
            child = _Label(st, lab.state, lab, move, acc, t, lab.visited | bit, inc, 0.0, lab.depth + 1)
            k = child.key()
            if k in settled or best_at_key.get(k, np.inf) <= t:
                continue
            child.reward = reward_of(st, lab, child.depth)
            best_at_key[k] = t
            n_labels += 1
            if n_labels > config.label_budget:
                raise PlanningError(f"label budget of {config.label_budget} exhausted")
            heapq.heappush(heap, (t, nb, next(counter), child))

    if goal is not None:
        raise PlanningError(f"goal {goal} unreachable")
    return best_label, n_labels


def plan(world, reward_map, risk_weights, start, anchor, config=None):
    """Maximum-utility path from ``start`` with the tether reeled from ``anchor``."""
    config = config or PlannerConfig()
    label, n = _search(world, reward_map, risk_weights, start, anchor, config)
    if label.reward <= 0.0:
        while label.parent is not None:
            label = label.parent
    res = _result(label, risk_weights, config)
    log.info("plan: %d labels, utility %.6g, risk %.6g", n, res.utility, res.risk)
    return PlanResult(**{**res.__dict__, "labels": n})


def min_risk_to(world, risk_weights, start, anchor, goal, config=None):
    """Minimum-risk path from ``start`` to ``goal``."""
    config = config or PlannerConfig()
    goal = tuple(int(v) for v in goal)
    if not world.is_free(goal):
        raise PlanningError(f"goal {goal} is not free")
    label, _ = _search(world, None, risk_weights, start, anchor, config, goal=goal)
    return _result(label, risk_weights, config).path


def brute_force_plan(world, reward_map, risk_weights, start, anchor, max_states=40, config=None):
    """Exact maximum-utility simple path by exhaustive enumeration.

    Every candidate is re-scored with :func:`path_risk`.  Branches are cut only
    when even the best reward cannot beat the incumbent, which is exact
    because path risk never decreases under extension.
    """
    config = config or PlannerConfig()
    if len(world.free_cells) > max_states:
        raise PlanningError(f"{len(world.free_cells)} free cells exceed the bound {max_states}")
    if config.reward_mode != "terminal":
        raise PlanningError("brute force supports terminal reward only")
    s0 = _start_state(world, start, anchor)
    max_reward = reward_map.max_reward
    best = [None, None]

    def visit(states, visited):
        path = Path(tuple(states))
        total, breakdown = path_risk(path, world, risk_weights)
        reward = cell_reward(reward_map, world, states[-1].position)
        cand = (_utility(reward, total, config), total, states[-1].cell)
        if _better(cand, best[0]):
            best[0], best[1] = cand, (path, total, breakdown, reward)
        if _utility(max_reward, total, config) < best[0][0]:
            return
        last = states[-1]
        for nb in world.neighbors(last.cell):
            if nb in visited:
                continue
            pos = tuple(float(v) for v in world.cell_center(nb))
            try:
                tether = advance(last.tether, pos, world)
            except TetherInfeasible:
                continue
            states.append(PathState(nb, pos, tether))
            visited.add(nb)
            visit(states, visited)
            visited.discard(nb)
            states.pop()

    visit([s0], {s0.cell})
    path, total, breakdown, reward = best[1]
    if reward <= 0.0:
        path = Path(path.states[:1])
        total, breakdown = path_risk(path, world, risk_weights)
        reward = cell_reward(reward_map, world, path.states[0].position)
    return PlanResult(path, total, breakdown, (), reward, _utility(reward, total, config))
