from typing import List

from ..types import DirectionalPdp


class SweepProvider:
    """A source of directional PDP sweeps, one set per route location."""

    def list_locations(self) -> List[str]:
        raise NotImplementedError

    def fetch_sweeps(self, location: str) -> List[DirectionalPdp]:
        raise NotImplementedError
