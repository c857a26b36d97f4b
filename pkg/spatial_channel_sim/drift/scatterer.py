from typing import Tuple

import numpy as np
from scipy.constants import speed_of_light

from ..types import Position
from .base import AngleDrift, scatterer_range, unit_vectors


class ScattererDrift(AngleDrift):
    """
    Fixed last-hop scatterer: the scatterer implied by the current AOA and
    delay stays put, and the new AOA is the bearing from the new receiver
    position to it. Subpaths without a consistent scatterer keep their angles.
    """

    name = "scatterer"

    def update(
        self,
        aoa_az: np.ndarray,
        aoa_el: np.ndarray,
        delays: np.ndarray,
        rx_prev: Position,
        rx_new: Position,
        tx: Position,
    ) -> Tuple[np.ndarray, np.ndarray]:
        u = unit_vectors(aoa_az, aoa_el)
        r = scatterer_range(u, speed_of_light * delays, rx_prev, tx)
        ok = np.isfinite(r)
        if not ok.any():
            return aoa_az.copy(), aoa_el.copy()

        scatterers = rx_prev.as_array() + r[ok, None] * u[ok]
        v = scatterers - rx_new.as_array()
        new_az = aoa_az.copy()
        new_el = aoa_el.copy()
        new_az[ok] = np.degrees(np.arctan2(v[:, 1], v[:, 0])) % 360.0
        new_el[ok] = np.degrees(np.arctan2(v[:, 2], np.hypot(v[:, 0], v[:, 1])))
        return new_az, new_el
