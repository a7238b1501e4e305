"""Exception hierarchy; ``exit_code`` is what the CLI returns for each kind."""


class TetherPlanError(Exception):
    """Base class for runtime failures (CLI exit code 1)."""

    exit_code = 1


class ConfigError(TetherPlanError):
    """Invalid or unresolvable input files (CLI exit code 2)."""

    exit_code = 2


class CollisionError(TetherPlanError, ValueError):
    pass


class TetherInfeasible(TetherPlanError):
    pass


class SingularityError(TetherPlanError):
    pass


class PlanningError(TetherPlanError):
    pass


class SimulationError(TetherPlanError):
    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step
