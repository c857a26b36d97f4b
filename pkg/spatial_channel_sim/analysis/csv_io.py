import csv
import math
import os
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from ..errors import InvalidInputError
from ..types import Pdp

NS = 1e-9
DIRECTIONAL_HEADER = ["azimuth_deg", "bin_width_ns", "first_bin_ns"]
OMNI_HEADER = ["bin_width_ns", "first_bin_ns"]
BIN_HEADER = ["delay_ns", "power_dbm"]
# fraction of a bin a row delay may sit off the header grid
GRID_TOLERANCE = 1e-6


def _to_dbm(p: float) -> str:
    return repr(10.0 * math.log10(p)) if p > 0 else "-inf"


def _from_dbm(text: str) -> float:
    value = float(text)
    return 0.0 if math.isinf(value) and value < 0 else 10.0 ** (value / 10.0)


def write_pdp_csv(
    path: str,
    pdp: Pdp,
    azimuth: Optional[float] = None,
    header: Optional[Dict[str, Any]] = None,
) -> str:
    """
    Write one PDP. Optional header metadata (the resolved run config) goes
    first as '#' comment lines; omnidirectional files omit the azimuth column.
    """
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as f:
        if header:
            for line in yaml.safe_dump(header, sort_keys=False).splitlines():
                f.write(f"# {line}\n")
        writer = csv.writer(f)
        if azimuth is None:
            writer.writerow(OMNI_HEADER)
            writer.writerow([repr(pdp.bin_width / NS), repr(pdp.first_bin_delay / NS)])
        else:
            writer.writerow(DIRECTIONAL_HEADER)
            writer.writerow([repr(azimuth), repr(pdp.bin_width / NS), repr(pdp.first_bin_delay / NS)])
        writer.writerow(BIN_HEADER)
        for delay, power in zip(pdp.delays, pdp.powers):
            writer.writerow([repr(float(delay) / NS), _to_dbm(power)])
    return path


def read_pdp_csv(path: str) -> Tuple[Optional[float], Pdp]:
    """Read a PDP CSV; returns (azimuth or None for omni, pdp)."""
    with open(path, "r", newline="") as f:
        rows = [r for r in csv.reader(line for line in f if not line.startswith("#")) if r]

    if len(rows) < 3:
        raise InvalidInputError(f"{path}: too few rows for a PDP file")
    head = [c.strip() for c in rows[0]]
    try:
        values = [float(c) for c in rows[1]]
    except ValueError as e:
        raise InvalidInputError(f"{path}: malformed header values: {e}") from e

    if head == DIRECTIONAL_HEADER:
        azimuth, bin_ns, first_ns = values
    elif head == OMNI_HEADER:
        azimuth = None
        bin_ns, first_ns = values
    else:
        raise InvalidInputError(f"{path}: unrecognised header {head}")
    if [c.strip() for c in rows[2]] != BIN_HEADER:
        raise InvalidInputError(f"{path}: expected bin header {BIN_HEADER}")

    try:
        bins = [(float(r[0]), _from_dbm(r[1])) for r in rows[3:]]
    except (ValueError, IndexError) as e:
        raise InvalidInputError(f"{path}: malformed bin row: {e}") from e
    if not bin_ns > 0:
        raise InvalidInputError(f"{path}: bin width must be positive, got {bin_ns} ns")
    powers = _place_bins(path, bins, bin_ns, first_ns)
    pdp = Pdp(bin_width=bin_ns * NS, first_bin_delay=first_ns * NS, powers=powers)
    return (azimuth % 360.0 if azimuth is not None else None), pdp


def _place_bins(path: str, bins, bin_ns: float, first_ns: float) -> List[float]:
    """
    Put each (delay_ns, power) row on its bin of the header grid. Rows may be
    sparse or out of order; bins with no row hold zero power.
    """
    if not bins:
        return []
    offsets = (np.array([d for d, _ in bins]) - first_ns) / bin_ns
    index = np.rint(offsets).astype(int)
    if np.any(np.abs(offsets - index) > GRID_TOLERANCE):
        raise InvalidInputError(f"{path}: bin delays are off the {bin_ns} ns grid")
    if np.any(index < 0):
        raise InvalidInputError(f"{path}: bin delay before the first bin at {first_ns} ns")
    if len(np.unique(index)) != len(index):
        raise InvalidInputError(f"{path}: duplicate bin delays")
    powers = np.zeros(int(index.max()) + 1)
    powers[index] = [p for _, p in bins]
    return powers.tolist()
