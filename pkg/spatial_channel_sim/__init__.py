from .types import (
    ChannelState,
    Cir,
    DriveLog,
    LargeScaleParams,
    LosState,
    MonteCarloSummary,
    Pdp,
    Position,
    Trajectory,
)
from .config import RunConfig, ScenarioConfig, load_config, validate_config
from .errors import ConfigError, InvalidInputError, SimulationError, UndefinedStatisticError
from .simulator import ChannelSimulator, run_drive, run_monte_carlo, simulate_drive

__all__ = [
    "ChannelState",
    "Cir",
    "DriveLog",
    "LargeScaleParams",
    "LosState",
    "MonteCarloSummary",
    "Pdp",
    "Position",
    "Trajectory",
    "RunConfig",
    "ScenarioConfig",
    "load_config",
    "validate_config",
    "ConfigError",
    "InvalidInputError",
    "SimulationError",
    "UndefinedStatisticError",
    "ChannelSimulator",
    "run_drive",
    "run_monte_carlo",
    "simulate_drive",
]
