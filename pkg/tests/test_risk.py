import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tetherplan import GridWorld, Path, PathState, RiskWeights, TetherState, path_risk, state_risk
from tetherplan.errors import ConfigError, PlanningError, TetherInfeasible
from tetherplan.risk import ELEMENTS, RiskBreakdown

from scenes import anchor_in, pillar_course, random_walk, random_weights, random_world
from test_tether import single_pillar

ZERO = RiskWeights(**{n: 0.0 for n in ELEMENTS})


def pstate(world, cell, anchor):
    pos = tuple(float(v) for v in world.cell_center(cell))
    return PathState(cell, pos, TetherState(anchor, pos))


def test_wide_open_state_is_risk_free():
    w = GridWorld.empty((20, 20, 20), 1.0)
    weights = RiskWeights(d_safe=1.0, h_min=1.0, isovist_range=3.0)
    s = pstate(w, (10, 10, 10), (0.3, 10.5, 0.3))
    assert state_risk(s, w, weights) == (0.0, 0.0, 0.0, 0.0)


def test_pole_gives_full_singularity_risk():
    w = GridWorld.empty((6, 6, 6), 1.0)
    s = pstate(w, (3, 4, 3), (3.5, 0.5, 3.5))
    assert s.tether.effective.theta == math.pi / 2
    assert state_risk(s, w, RiskWeights())[3] == 1.0


def test_distance_element_half_of_safe_distance():
    occ = np.zeros((5, 3, 5), dtype=bool)
    occ[3, 1, 2] = True
    w = GridWorld(occ, 0.5)
    s = pstate(w, (2, 1, 2), (0.3, 0.75, 0.3))
    assert w.distance_to_obstacle(s.position) == 0.25
    assert state_risk(s, w, RiskWeights(d_safe=0.5))[0] == 0.5


def test_state_risk_off_center_matches_direct_queries():
    rng = np.random.default_rng(4)
    w = random_world(rng, (6, 4, 6), 0.2, 0.5)
    weights = RiskWeights()
    for c in w.free_cells[:10]:
        p = tuple(w.cell_center(c) + 0.1)
        s = PathState(c, p, TetherState(anchor_in(w, rng, c), p))
        r_d, r_v, r_a, _ = state_risk(s, w, weights)
        assert r_d == max(0.0, 1.0 - w.distance_to_obstacle(p) / weights.d_safe)
        assert r_v == 1.0 - w.isovist_score(p)
        assert r_a == max(0.0, 1.0 - w.vertical_clearance(p) / weights.h_min)


def test_single_state_path():
    w = GridWorld.empty((4, 3, 4), 1.0)
    anchor = (0.3, 0.3, 0.3)
    p = Path.from_cells(w, [(2, 1, 2)], anchor)
    total, b = path_risk(p, w, RiskWeights())
    assert b.action_length == b.access == b.tortuosity == b.azimuth == 0.0
    t = p.states[0].tether
    expect = sum(state_risk(p.states[0], w, RiskWeights())) + t.L_total / 30.0
    assert total == pytest.approx(expect, abs=1e-15)


def test_straight_and_turning_paths():
    w = GridWorld.empty((5, 3, 5), 0.5)
    anchor = (0.1, 0.75, 1.25)
    _, b = path_risk(Path.from_cells(w, [(1, 1, 2), (2, 1, 2), (3, 1, 2)], anchor), w, RiskWeights())
    assert b.action_length == 2 * 0.5
    assert b.tortuosity == 0.0
    _, b = path_risk(Path.from_cells(w, [(1, 1, 1), (2, 1, 1), (2, 1, 2)], anchor), w, RiskWeights())
    assert b.tortuosity == pytest.approx(math.sqrt(2) * 0.5, abs=1e-15)


def test_easy_void_crossing_adds_no_access_risk():
    occ = np.zeros((4, 1, 5), dtype=bool)
    occ[1:, :, 2] = True
    labels = np.zeros(occ.shape, dtype=int)
    labels[:, :, 3:] = 1
    labels[occ] = -1
    w = GridWorld(occ, 1.0, void_labels=labels, access={(0, 1): -2.0, (1, 0): 3.0})
    cells = [(0, 0, 1), (0, 0, 2), (0, 0, 3)]
    _, b = path_risk(Path.from_cells(w, cells, (0.5, 0.5, 0.3)), w, RiskWeights())
    assert b.access == 0.0
    _, b = path_risk(Path.from_cells(w, cells[::-1], (0.5, 0.5, 4.7)), w, RiskWeights())
    assert b.access == 3.0


def test_relaxed_contact_still_counts():
    w, anchor, _ = single_pillar()
    cells = [(2, 1, 3), (2, 1, 4), (2, 1, 5), (2, 1, 6), (3, 1, 7), (2, 1, 7)]
    p = Path.from_cells(w, cells, anchor)
    assert [s.tether.n_contacts for s in p.states] == [0, 0, 0, 0, 1, 0]
    _, b = path_risk(p, w, RiskWeights())
    assert b.contacts == 1.0


def test_zero_weights_zero_total():
    rng = np.random.default_rng(0)
    w = pillar_course(rng, 2)
    start = (1, 0, 1)
    p = Path.from_cells(w, random_walk(w, rng, start, 8), anchor_in(w, rng, start))
    total, b = path_risk(p, w, ZERO)
    assert total == 0.0
    assert sum(b) > 0.0


def test_linear_in_weights():
    rng = np.random.default_rng(1)
    w = pillar_course(rng, 2)
    start = (1, 0, 1)
    p = Path.from_cells(w, random_walk(w, rng, start, 8), anchor_in(w, rng, start))
    a = random_weights(rng)
    b = RiskWeights(**{**a.__dict__, **{n: 2 * getattr(a, n) for n in ELEMENTS}})
    assert path_risk(p, w, b)[0] == pytest.approx(2 * path_risk(p, w, a)[0], rel=1e-12)


def test_invalid_paths_rejected():
    occ = np.zeros((4, 1, 4), dtype=bool)
    occ[2, 0, 2] = True
    w = GridWorld(occ, 1.0)
    a = (0.3, 0.5, 0.3)
    p = Path.from_cells(w, [(0, 0, 0), (1, 0, 1)], a)
    with pytest.raises(PlanningError, match="revisits"):
        path_risk(Path(p.states + (p.states[0],)), w, RiskWeights())
    far = pstate(w, (3, 0, 3), a)
    with pytest.raises(PlanningError, match="adjacent"):
        path_risk(Path((p.states[0], far)), w, RiskWeights())
    with pytest.raises(PlanningError, match="collision"):
        path_risk(Path((p.states[0], pstate(w, (2, 0, 2), a))), w, RiskWeights())


def test_weights_from_dict():
    w = RiskWeights.from_dict({"distance": 2.0, "theta_sing_deg": 60.0})
    assert w.distance == 2.0 and w.theta_sing == pytest.approx(math.radians(60))
    with pytest.raises(ConfigError):
        RiskWeights.from_dict({"bogus": 1.0})
    with pytest.raises(ConfigError):
        RiskWeights(tortuosity=-1.0)


def test_breakdown_arithmetic():
    a = RiskBreakdown(*range(10))
    assert (a + a) - a == a
    assert a.as_dict()["azimuth"] == 9
    assert a.total(RiskWeights()) == 45.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_extension_never_lowers_risk(seed):
    rng = np.random.default_rng(seed)
    w = random_world(rng, (6, 3, 6), 0.2, 0.5)
    start = w.free_cells[rng.integers(len(w.free_cells))]
    anchor = anchor_in(w, rng, start)
    cells = random_walk(w, rng, start, int(rng.integers(1, 12)))
    try:
        path = Path.from_cells(w, cells, anchor)
    except TetherInfeasible:
        return
    weights = random_weights(rng)
    prev_total, prev_b = None, None
    for n in range(1, len(path) + 1):
        total, b = path_risk(Path(path.states[:n]), w, weights)
        if prev_total is not None:
            assert total >= prev_total
            assert all(x >= y for x, y in zip(b, prev_b))
        prev_total, prev_b = total, b
    # re-evaluation is stable
    assert path_risk(path, w, weights) == path_risk(path, w, weights)
