from typing import Tuple

import numpy as np
from scipy.constants import speed_of_light

from ..types import Position
from .base import AngleDrift, scatterer_range, unit_vectors


class LinearDrift(AngleDrift):
    """
    First-order azimuth drift: the bearing rotates by the displacement
    component perpendicular to it divided by the horizontal scatterer range.
    Elevation is held.
    """

    name = "linear"

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
        rho = r * np.cos(np.radians(aoa_el))

        step = rx_new.as_array() - rx_prev.as_array()
        az = np.radians(aoa_az)
        # component of the step along the bearing's left normal
        lateral = -np.sin(az) * step[0] + np.cos(az) * step[1]
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = -np.degrees(lateral / rho)
        delta[~np.isfinite(delta)] = 0.0
        return (aoa_az + delta) % 360.0, aoa_el.copy()
