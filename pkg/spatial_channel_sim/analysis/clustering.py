import numpy as np

from ..types import Pdp

DEFAULT_MIN_VOID = 25e-9


def count_time_clusters(pdp: Pdp, min_void: float = DEFAULT_MIN_VOID) -> int:
    """
    Number of runs of occupied bins. Two occupied bins belong to different
    clusters when the empty stretch between them lasts at least min_void.
    """
    occupied = np.flatnonzero(pdp.as_array() > 0)
    if occupied.size == 0:
        return 0
    gaps = (np.diff(occupied) - 1) * pdp.bin_width
    return 1 + int(np.count_nonzero(gaps >= min_void * (1.0 - 1e-9)))
