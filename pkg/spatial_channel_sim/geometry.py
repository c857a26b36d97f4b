import math
from typing import List, Optional

import numpy as np

from .errors import InvalidInputError
from .types import GridIndex, Position, Trajectory, UpdateTick

# Arc-length slack when deciding whether the route end needs its own tick
_ARC_TOLERANCE = 1e-9


def tick_period(speed: float, update_distance: float) -> float:
    """Seconds between updates, e.g. 1 m at 0.5 m/s is 2 s."""
    if not speed > 0 or not update_distance > 0:
        raise InvalidInputError("speed and update distance must be positive")
    return update_distance / speed


def build_update_schedule(trajectory: Trajectory, update_distance: float) -> List[UpdateTick]:
    """
    Place ticks every update_distance of arc length along the waypoint polyline.

    Both route ends get a tick, so the final step may be shorter than
    update_distance. The heading of a tick is the direction of the segment it
    lies on; a tick exactly on a waypoint takes the outgoing segment.
    """
    if not update_distance > 0:
        raise InvalidInputError(f"update distance must be positive, got {update_distance}")

    pts = np.array([p.as_array() for p in trajectory.waypoints])
    seg = np.diff(pts, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    total = float(seg_len.sum())
    if total <= 0 or np.any(seg_len <= 0):
        raise InvalidInputError("trajectory has zero length")

    starts = np.concatenate([[0.0], np.cumsum(seg_len)[:-1]])
    n_full = int(math.floor(total / update_distance + _ARC_TOLERANCE))
    arcs = [k * update_distance for k in range(n_full + 1)]
    if total - arcs[-1] > _ARC_TOLERANCE:
        arcs.append(total)

    ticks = []
    for index, s in enumerate(arcs):
        k = int(np.searchsorted(starts, s, side="right")) - 1
        k = min(max(k, 0), len(seg_len) - 1)
        frac = min((s - starts[k]) / seg_len[k], 1.0)
        xyz = pts[k] + frac * seg[k]
        planar = seg[k][:2]
        norm = float(np.linalg.norm(planar))
        heading = (float(planar[0] / norm), float(planar[1] / norm)) if norm > 0 else (0.0, 0.0)
        ticks.append(
            UpdateTick(
                index=index,
                time=s / trajectory.speed,
                position=Position.from_array(xyz),
                heading=heading,
                arc_length=s,
            )
        )
    return ticks


def grid_of(
    position: Position, correlation_distance: float, origin: Optional[Position] = None
) -> GridIndex:
    """Half-open square cells of side correlation_distance; height is ignored."""
    if not correlation_distance > 0:
        raise InvalidInputError(
            f"correlation distance must be positive, got {correlation_distance}"
        )
    ox, oy = (origin.x, origin.y) if origin is not None else (0.0, 0.0)
    return GridIndex(
        i=int(math.floor((position.x - ox) / correlation_distance)),
        j=int(math.floor((position.y - oy) / correlation_distance)),
    )


def tr_separation(tx: Position, rx: Position) -> float:
    return math.dist((tx.x, tx.y, tx.z), (rx.x, rx.y, rx.z))


def direction_angles(src: Position, dst: Position) -> tuple:
    """Azimuth/elevation in degrees of the ray from src towards dst."""
    d = dst.as_array() - src.as_array()
    az = math.degrees(math.atan2(d[1], d[0])) % 360.0
    el = math.degrees(math.atan2(d[2], math.hypot(d[0], d[1])))
    return az, el
