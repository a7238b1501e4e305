import dataclasses
import math

import numpy as np
import pytest

from tetherplan import GridWorld, Path, RiskWeights, path_risk
from tetherplan.errors import SimulationError
from tetherplan.planner import PlanResult
from tetherplan.sim import LOG_COLUMNS, SimConfig, read_csv, simulate
from tetherplan.tether import effective_controls, static_length, tether_feasible


def make_plan(world, cells, anchor, weights=None):
    weights = weights or RiskWeights()
    p = Path.from_cells(world, cells, anchor)
    total, b = path_risk(p, world, weights)
    return PlanResult(p, total, b, (), 0.0, 0.0)


OPEN = GridWorld.empty((10, 4, 10), 0.5)
ANCHOR = (0.3, 0.25, 0.3)


def test_zero_length_plan():
    traj, m = simulate(make_plan(OPEN, [(3, 1, 3)], ANCHOR), OPEN)
    assert m.steps == 0 and m.flight_accuracy == 0.0
    assert len(traj.rows) == 1


@pytest.mark.parametrize("primitive", ["position", "velocity"])
def test_straight_three_waypoints(primitive):
    plan = make_plan(OPEN, [(2, 1, 2), (3, 1, 3), (4, 1, 4)], ANCHOR)
    traj, m = simulate(plan, OPEN, SimConfig(primitive=primitive))
    assert [a[0] for a in traj.arrivals] == [1, 2]
    for wp, _, pos in traj.arrivals:
        assert math.dist(pos, plan.path.states[wp].position) <= 0.05
    assert m.flight_accuracy < 0.05


def test_no_overshoot_beyond_twenty_percent():
    plan = make_plan(OPEN, [(2, 1, 2), (2, 1, 3), (2, 1, 4), (2, 1, 5)], ANCHOR)
    traj, _ = simulate(plan, OPEN)
    start = np.array(plan.path.states[0].position)
    end = np.array(plan.path.states[-1].position)
    leg = end - start
    along = [(np.array(r[2:5]) - start) @ leg / (leg @ leg) for r in traj.rows]
    assert max(along) <= 1.2


def test_deterministic_logs():
    plan = make_plan(OPEN, [(2, 1, 2), (3, 1, 3), (3, 2, 4)], ANCHOR)
    cfg = SimConfig(noise=0.01, seed=11)
    a, ma = simulate(plan, OPEN, cfg)
    b, mb = simulate(plan, OPEN, cfg)
    assert a.to_csv() == b.to_csv() and ma == mb
    c, _ = simulate(plan, OPEN, dataclasses.replace(cfg, seed=12))
    assert c.to_csv() != a.to_csv()


def test_noisy_run_still_reaches_waypoints():
    plan = make_plan(OPEN, [(2, 1, 2), (3, 1, 3), (4, 1, 4)], ANCHOR)
    traj, m = simulate(plan, OPEN, SimConfig(noise=0.02, seed=3))
    assert [a[0] for a in traj.arrivals] == [1, 2]
    assert m.max_waypoint_error <= SimConfig().tolerance


def test_failures_report_step():
    plan = make_plan(OPEN, [(2, 1, 2), (3, 1, 3)], ANCHOR)
    with pytest.raises(SimulationError, match="max steps") as exc:
        simulate(plan, OPEN, SimConfig(max_steps=5))
    assert exc.value.step == 5
    # climbing straight over the reel drives the Jacobian singular
    anchor = (1.25, 0.25, 1.25)
    plan = make_plan(OPEN, [(2, 1, 2), (2, 2, 2), (2, 3, 2)], anchor)
    with pytest.raises(SimulationError, match="singularity") as exc:
        simulate(plan, OPEN, SimConfig(primitive="velocity"))
    assert exc.value.step >= 1


def test_csv_round_trip(tmp_path):
    plan = make_plan(OPEN, [(2, 1, 2), (3, 1, 3)], ANCHOR)
    traj, _ = simulate(plan, OPEN)
    path = tmp_path / "t.csv"
    traj.write_csv(path)
    rows = read_csv(path)
    assert tuple(rows[0]) == LOG_COLUMNS
    assert [tuple(r.values()) for r in rows] == [tuple(r) for r in traj.rows]


def test_config_validation():
    for bad in ({"dt": 0}, {"tolerance": 0}, {"primitive": "warp"}, {"noise": -1}):
        with pytest.raises(ValueError):
            SimConfig(**bad)


def test_bundled_runs(bundled):
    for name, (sc, result, traj, m) in bundled.items():
        assert len(traj.arrivals) == len(result.path) - 1, name
        assert m.max_waypoint_error <= 0.05
        assert m.flight_accuracy < 0.05
        assert m.feasibility_violations == 0
        assert m.risk_gap <= 0.15, name
        # the executed tether ends in the stack the planner predicted
        assert traj.tethers[-1].contacts == result.terminal_tether.contacts
        for t in traj.tethers:
            assert tether_feasible(t, sc.world)
            assert abs(t.L_total - (static_length(t) + effective_controls(t).L)) <= 1e-9
