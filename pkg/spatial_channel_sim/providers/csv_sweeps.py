import logging
import os
from typing import List

from ..errors import InvalidInputError
from ..analysis.csv_io import read_pdp_csv
from ..types import DirectionalPdp
from .base import SweepProvider

logger = logging.getLogger(__name__)


class CsvSweepProvider(SweepProvider):
    """
    Sweeps stored as PDP CSV files. Every subdirectory of root is one location
    holding one file per pointing angle; a CSV directly under root is a
    location with a single (usually omnidirectional) PDP. Locations are
    visited in name order, so name them in route order.
    """

    def __init__(self, root: str):
        if not os.path.isdir(root):
            raise InvalidInputError(f"sweep directory not found: {root}")
        self.root = root

    def list_locations(self) -> List[str]:
        names = []
        for name in sorted(os.listdir(self.root)):
            path = os.path.join(self.root, name)
            if os.path.isdir(path) or name.endswith(".csv"):
                names.append(name)
        return names

    def fetch_sweeps(self, location: str) -> List[DirectionalPdp]:
        path = os.path.join(self.root, location)
        if os.path.isfile(path):
            files = [path]
        elif os.path.isdir(path):
            files = [os.path.join(path, n) for n in sorted(os.listdir(path)) if n.endswith(".csv")]
        else:
            raise InvalidInputError(f"unknown location: {location}")

        sweeps = []
        for file in files:
            try:
                azimuth, pdp = read_pdp_csv(file)
            except (InvalidInputError, ValueError) as e:
                logger.warning(f"Skipping unreadable sweep {file}: {e}")
                continue
            sweeps.append(DirectionalPdp(azimuth=azimuth or 0.0, pdp=pdp))
        return sweeps
