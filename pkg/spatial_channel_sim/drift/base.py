from typing import Tuple

import numpy as np

from ..types import Position

# Shorter ranges put the scatterer on the receiver and leave the bearing undefined
MIN_SCATTERER_RANGE = 1e-3  # m


def unit_vectors(az_deg: np.ndarray, el_deg: np.ndarray) -> np.ndarray:
    """(n, 3) unit vectors for azimuth/elevation pairs in degrees."""
    az = np.radians(az_deg)
    el = np.radians(el_deg)
    return np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1)


def scatterer_range(
    aoa: np.ndarray, path_length: np.ndarray, rx: Position, tx: Position
) -> np.ndarray:
    """
    Distance from rx to a last-hop scatterer along each arrival direction such
    that |scatterer - tx| + range equals the path length. Entries with no
    physical solution, or a range below MIN_SCATTERER_RANGE, are nan.
    """
    d = rx.as_array() - tx.as_array()
    denom = 2.0 * (path_length + aoa @ d)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (path_length**2 - d @ d) / denom
    r[~np.isfinite(r) | (r < MIN_SCATTERER_RANGE)] = np.nan
    return r


class AngleDrift:
    """Updates arrival angles of non-LOS subpaths for one receiver displacement."""

    name = "base"

    def update(
        self,
        aoa_az: np.ndarray,
        aoa_el: np.ndarray,
        delays: np.ndarray,
        rx_prev: Position,
        rx_new: Position,
        tx: Position,
    ) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError
