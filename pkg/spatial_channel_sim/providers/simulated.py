from typing import List, Sequence

from ..analysis.pdp import sector_sweeps
from ..errors import InvalidInputError
from ..types import Cir, DirectionalPdp
from .base import SweepProvider


class SimulatedSweepProvider(SweepProvider):
    """Ideal-sector sweeps of simulated CIRs, one location per tick."""

    def __init__(self, cirs: Sequence[Cir], bin_width: float, beamwidth_deg: float = 15.0):
        self.cirs = {f"tick_{c.tick_index:04d}": c for c in cirs}
        self.bin_width = bin_width
        self.beamwidth_deg = beamwidth_deg

    def list_locations(self) -> List[str]:
        return list(self.cirs)

    def fetch_sweeps(self, location: str) -> List[DirectionalPdp]:
        cir = self.cirs.get(location)
        if cir is None:
            raise InvalidInputError(f"unknown location: {location}")
        return sector_sweeps(cir, self.bin_width, self.beamwidth_deg)
