import os

import pytest
from hypothesis import settings

from tetherplan import io, plan
from tetherplan.sim import simulate

settings.register_profile("default", deadline=None, print_blob=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# acceptance results, collected by tests/test_acceptance.py and echoed at the end
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture(scope="session")
def bundled():
    """Plan and fly every bundled scenario once: name -> (scenario, plan, trajectory, metrics)."""
    out = {}
    for name in io.bundled_scenarios():
        sc = io.load_scenario(name)
        w = sc.world
        result = plan(w, sc.reward_map, sc.weights, w.start, w.anchor, sc.planner)
        traj, metrics = simulate(result, w, sc.sim, sc.gains, sc.reward_map, sc.weights)
        out[name] = (sc, result, traj, metrics)
    return out
