"""Tethered-UAV visual assistant: viewpoint reward, path risk, planning, tether control, simulation."""
from .world import GridWorld
from .reward import AffordancePose, ViewpointQualityMap, build_hemisphere, viewpoint_quality
from .risk import Path, PathState, RiskBreakdown, RiskWeights, path_risk, state_risk
from .tether import (
    PolarCoords,
    TetherState,
    effective_controls,
    forward_position,
    inverse_position,
    static_length,
    update_contacts,
)
from .planner import PlanResult, PlannerConfig, brute_force_plan, min_risk_to, plan

__version__ = "0.1.0"
