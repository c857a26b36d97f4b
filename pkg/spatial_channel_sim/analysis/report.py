import logging
import os
from typing import Any, Dict, List, Optional

import yaml

from ..config import AnalysisConfig
from ..errors import UndefinedStatisticError
from ..providers.base import SweepProvider
from ..types import AnalysisReport, DirectionalPdp, LocationAnalysis, RouteSeries
from .clustering import count_time_clusters
from .correlation import MIN_SERIES_LENGTH, estimate_correlation_distance
from .pdp import average_sweeps, denoise, rms_delay_spread, synthesize_omni, total_power_dbm

logger = logging.getLogger(__name__)


def analyze_location(
    location: str, sweeps: List[DirectionalPdp], cfg: AnalysisConfig
) -> LocationAnalysis:
    """
    Denoise each sweep, combine to omni, then count clusters and measure spread.
    Repeated sweeps at one azimuth are averaged first unless
    cfg.average_repeated_sweeps is off, in which case they add up like distinct
    pointing angles.
    """
    combined = sweeps
    if cfg.average_repeated_sweeps and len({s.azimuth for s in sweeps}) < len(sweeps):
        combined = average_sweeps([[s] for s in sweeps])
        logger.debug(f"{location}: averaged {len(sweeps)} sweeps onto {len(combined)} azimuths")
    cleaned = [
        DirectionalPdp(azimuth=s.azimuth, pdp=denoise(s.pdp, cfg.threshold_db)) for s in combined
    ]
    omni = synthesize_omni(cleaned)
    try:
        spread = rms_delay_spread(omni)
    except UndefinedStatisticError:
        spread = None
    return LocationAnalysis(
        location=location,
        n_sweeps=len(sweeps),
        cluster_count=count_time_clusters(omni, cfg.min_void),
        rms_delay_spread=spread,
        total_power_dbm=total_power_dbm(omni),
    )


def _route_estimate(values: List[Optional[float]], spacing: float) -> Optional[float]:
    if len(values) < MIN_SERIES_LENGTH or any(v is None for v in values):
        return None
    return estimate_correlation_distance(RouteSeries(spacing=spacing, values=values))


def analyze_route(provider: SweepProvider, spacing: float, cfg: AnalysisConfig) -> AnalysisReport:
    """
    Per-location analysis of every location the provider serves, plus route
    correlation distances of the cluster count and delay spread when the route
    has enough locations.
    """
    locations = []
    bin_width = None
    for name in provider.list_locations():
        sweeps = provider.fetch_sweeps(name)
        if not sweeps:
            logger.warning(f"No sweeps at location {name}, skipping")
            continue
        bin_width = bin_width or sweeps[0].pdp.bin_width
        locations.append(analyze_location(name, sweeps, cfg))

    report = AnalysisReport(
        spacing=spacing,
        threshold_db=cfg.threshold_db,
        min_void=cfg.min_void,
        bin_width=bin_width,
        locations=locations,
        cluster_count_correlation_distance=_route_estimate(
            [float(loc.cluster_count) for loc in locations], spacing
        ),
        delay_spread_correlation_distance=_route_estimate(
            [loc.rms_delay_spread for loc in locations], spacing
        ),
    )
    logger.info(f"Analysed {len(locations)} locations at {spacing} m spacing")
    return report


def write_report(path: str, report: AnalysisReport, config: Optional[Dict[str, Any]] = None) -> str:
    """Dump the report as YAML, led by the resolved config echo when given."""
    data = report.model_dump()
    if config is not None:
        data = {"config": config, **data}
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        yaml.safe_dump(data, f, sort_keys=False)
    return path
