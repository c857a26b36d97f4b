"""
Write emulated 24-direction sweeps of one simulated drive as PDP CSVs, one
subdirectory per tick, in the layout `spatial-sim analyze` reads.

    uv run scripts/export_sweeps.py [config.yml] [out_dir]
"""
import os
import sys

from spatial_channel_sim.analysis import sector_sweeps, write_pdp_csv
from spatial_channel_sim.config import load_config
from spatial_channel_sim.simulator import simulate_drive


def export_sweeps(config_path=None, out_dir="output/sweeps"):
    cfg = load_config(config_path)
    log, cirs = simulate_drive(cfg)
    an = cfg.analysis
    print(f"Exporting {len(cirs)} ticks of sector sweeps to {out_dir}...")
    for cir in cirs:
        location = os.path.join(out_dir, f"tick_{cir.tick_index:04d}")
        for sweep in sector_sweeps(cir, an.bin_width, an.beamwidth_deg):
            name = f"az_{sweep.azimuth:05.1f}.csv"
            write_pdp_csv(os.path.join(location, name), sweep.pdp, azimuth=sweep.azimuth, header={"config": log.config})
    print(f"Done. Analyse with: spatial-sim analyze {out_dir} --spacing {cfg.update_distance}")


if __name__ == "__main__":
    args = sys.argv[1:]
    export_sweeps(
        args[0] if len(args) > 0 else None,
        args[1] if len(args) > 1 else "output/sweeps",
    )
