from typing import List, Optional


class SimulationError(Exception):
    """Base class for every error raised by the simulator."""


class InvalidInputError(SimulationError, ValueError):
    pass


class UndefinedStatisticError(SimulationError, ArithmeticError):
    pass


class ConfigError(SimulationError):
    def __init__(self, errors: List[str], source: Optional[str] = None):
        self.errors = list(errors)
        self.source = source
        prefix = f"{source}: " if source else ""
        super().__init__(prefix + "; ".join(self.errors))
