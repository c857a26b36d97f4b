from .clustering import count_time_clusters
from .correlation import estimate_correlation_distance, median_run_length, run_lengths
from .csv_io import read_pdp_csv, write_pdp_csv
from .pdp import (
    align_to_first_arrival,
    average_sweeps,
    cir_to_pdp,
    denoise,
    rms_delay_spread,
    sector_sweeps,
    synthesize_omni,
    total_power_dbm,
)
from .report import analyze_location, analyze_route, write_report

__all__ = [
    "align_to_first_arrival",
    "analyze_location",
    "analyze_route",
    "average_sweeps",
    "cir_to_pdp",
    "count_time_clusters",
    "denoise",
    "estimate_correlation_distance",
    "median_run_length",
    "read_pdp_csv",
    "rms_delay_spread",
    "run_lengths",
    "sector_sweeps",
    "synthesize_omni",
    "total_power_dbm",
    "write_pdp_csv",
    "write_report",
]
