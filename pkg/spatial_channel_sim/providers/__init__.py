from .base import SweepProvider
from .csv_sweeps import CsvSweepProvider
from .simulated import SimulatedSweepProvider

__all__ = ["SweepProvider", "CsvSweepProvider", "SimulatedSweepProvider"]
