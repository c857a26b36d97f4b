import logging
import math
from collections import defaultdict
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..errors import InvalidInputError, UndefinedStatisticError
from ..types import Cir, DirectionalPdp, Pdp

logger = logging.getLogger(__name__)

# Relative slack for floating-point delays that sit on a bin edge
_BIN_EPS = 1e-9


def _bin_indices(delays: np.ndarray, first_bin_delay: float, bin_width: float) -> np.ndarray:
    return np.floor((delays - first_bin_delay) / bin_width + _BIN_EPS).astype(int)


def _same_grid(a: Pdp, b: Pdp) -> bool:
    return (
        math.isclose(a.bin_width, b.bin_width, rel_tol=1e-9)
        and math.isclose(a.first_bin_delay, b.first_bin_delay, rel_tol=1e-9, abs_tol=1e-15)
    )


def _stack(pdps: Sequence[Pdp]) -> np.ndarray:
    # missing trailing bins hold no power
    n = max(len(p.powers) for p in pdps)
    return np.array([np.pad(p.as_array(), (0, n - len(p.powers))) for p in pdps])


def cir_to_pdp(
    cir: Cir,
    bin_width: float,
    first_bin_delay: Optional[float] = None,
    n_bins: Optional[int] = None,
) -> Pdp:
    """
    Incoherently bin tap powers by delay. By default the grid starts at the
    bin edge below the first arrival; pass first_bin_delay and n_bins to put
    several CIRs on one grid.
    """
    if len(cir.delays) == 0:
        raise InvalidInputError("cannot bin an empty CIR")
    if not bin_width > 0:
        raise InvalidInputError(f"bin width must be positive, got {bin_width}")

    if first_bin_delay is None:
        first_bin_delay = math.floor(float(cir.delays.min()) / bin_width + _BIN_EPS) * bin_width
    idx = _bin_indices(cir.delays, first_bin_delay, bin_width)
    if n_bins is None:
        n_bins = int(idx.max()) + 1
    if idx.min() < 0 or idx.max() >= n_bins:
        raise InvalidInputError("CIR taps fall outside the requested bin grid")

    powers = np.bincount(idx, weights=cir.tap_powers, minlength=n_bins)
    return Pdp(bin_width=bin_width, first_bin_delay=first_bin_delay, powers=powers.tolist())


def denoise(pdp: Pdp, threshold_db: float = 20.0) -> Pdp:
    """Zero every bin more than threshold_db below the peak."""
    if not threshold_db > 0:
        raise InvalidInputError(f"threshold must be positive, got {threshold_db} dB")
    p = pdp.as_array()
    peak = p.max() if p.size else 0.0
    if peak <= 0:
        return pdp
    floor = peak / 10.0 ** (threshold_db / 10.0)
    return pdp.model_copy(update={"powers": np.where(p < floor, 0.0, p).tolist(), "noise_floor": floor})


def synthesize_omni(sweeps: Sequence[DirectionalPdp]) -> Pdp:
    """Per-bin linear sum over pointing angles of already denoised sweeps."""
    if not sweeps:
        raise InvalidInputError("no directional PDPs to combine")
    ref = sweeps[0].pdp
    for s in sweeps[1:]:
        if not _same_grid(ref, s.pdp):
            raise InvalidInputError(
                f"PDP at azimuth {s.azimuth} does not share the bin grid of azimuth {sweeps[0].azimuth}"
            )
    total = _stack([s.pdp for s in sweeps]).sum(axis=0)
    return Pdp(bin_width=ref.bin_width, first_bin_delay=ref.first_bin_delay, powers=total.tolist())


def rms_delay_spread(pdp: Pdp) -> float:
    p = pdp.as_array()
    total = p.sum()
    if not total > 0:
        raise UndefinedStatisticError("rms delay spread of a PDP with zero power is undefined")
    tau = pdp.delays
    mean = (p * tau).sum() / total
    return float(math.sqrt(max((p * tau**2).sum() / total - mean**2, 0.0)))


def align_to_first_arrival(pdp: Pdp) -> Pdp:
    """Drop absolute delay: the first occupied bin becomes delay zero."""
    occupied = np.flatnonzero(pdp.as_array() > 0)
    start = int(occupied[0]) if occupied.size else 0
    return pdp.model_copy(update={"powers": pdp.powers[start:], "first_bin_delay": 0.0})


def sector_sweeps(
    cir: Cir, bin_width: float, beamwidth_deg: float = 15.0
) -> List[DirectionalPdp]:
    """
    Emulate one azimuth sweep with ideal sectors: the antenna pointed at p
    collects taps arriving from [p - beamwidth/2, p + beamwidth/2). Sectors
    tile the circle, so the sweeps together hold all of the CIR's power.
    """
    n_sectors = int(round(360.0 / beamwidth_deg))
    if n_sectors < 1 or not math.isclose(n_sectors * beamwidth_deg, 360.0):
        raise InvalidInputError(f"beamwidth {beamwidth_deg} deg does not tile 360 deg")

    full = cir_to_pdp(cir, bin_width)
    idx = _bin_indices(cir.delays, full.first_bin_delay, bin_width)
    sector = (np.floor(((cir.aoa_az + beamwidth_deg / 2.0) % 360.0) / beamwidth_deg).astype(int)) % n_sectors
    powers = cir.tap_powers

    sweeps = []
    for k in range(n_sectors):
        mask = sector == k
        binned = np.bincount(idx[mask], weights=powers[mask], minlength=len(full.powers))
        sweeps.append(
            DirectionalPdp(
                azimuth=k * beamwidth_deg,
                pdp=Pdp(
                    bin_width=bin_width,
                    first_bin_delay=full.first_bin_delay,
                    powers=binned.tolist(),
                ),
            )
        )
    return sweeps


def average_sweeps(sweep_sets: Sequence[Sequence[DirectionalPdp]]) -> List[DirectionalPdp]:
    """Average repeated sweeps of one location, per pointing angle and bin."""
    if not sweep_sets:
        raise InvalidInputError("no sweeps to average")
    by_azimuth: Dict[float, List[Pdp]] = defaultdict(list)
    for sweeps in sweep_sets:
        for s in sweeps:
            by_azimuth[s.azimuth].append(s.pdp)

    averaged = []
    for azimuth in sorted(by_azimuth):
        pdps = by_azimuth[azimuth]
        for p in pdps[1:]:
            if not _same_grid(pdps[0], p):
                raise InvalidInputError(f"repeated sweeps at azimuth {azimuth} use different bin grids")
        mean = _stack(pdps).mean(axis=0)
        averaged.append(DirectionalPdp(azimuth=azimuth, pdp=pdps[0].model_copy(update={"powers": mean.tolist()})))
    logger.debug(f"Averaged {len(sweep_sets)} sweeps over {len(averaged)} pointing angles")
    return averaged


def total_power_dbm(pdp: Pdp) -> Optional[float]:
    total = float(pdp.as_array().sum())
    return 10.0 * math.log10(total) if total > 0 else None
