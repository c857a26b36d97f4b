import json
import os

import numpy as np
import pytest
import yaml

from spatial_channel_sim.analysis import read_pdp_csv
from spatial_channel_sim.config import validate_config
from spatial_channel_sim.errors import ConfigError, InvalidInputError
from spatial_channel_sim.fields import FieldBank
from spatial_channel_sim.large_scale import lsp_at, lsp_for_grid
from spatial_channel_sim.simulator import (
    DRIVE_LOG_NAME,
    PDP_DIR,
    REPORT_NAME,
    ChannelSimulator,
    replicate_seeds,
    run_drive,
    run_monte_carlo,
    simulate_drive,
)
from spatial_channel_sim.types import LosState

from .test_data import make_run_config


@pytest.mark.unit
def test_drive_is_reproducible(tmp_path):
    cfg = make_run_config(output_dir=str(tmp_path))
    path = tmp_path / DRIVE_LOG_NAME

    run_drive(cfg)
    first = path.read_bytes()
    run_drive(cfg)
    assert path.read_bytes() == first

    run_drive(cfg.model_copy(update={"seed": 2018}))
    assert path.read_bytes() != first


@pytest.mark.unit
def test_drive_log_layout(tmp_path):
    """A 75 m route at 1 m ticks gives 76 records after a config header line."""
    log = run_drive(make_run_config(output_dir=str(tmp_path)))
    assert len(log.records) == 76
    assert log.artifacts == [os.path.join(str(tmp_path), DRIVE_LOG_NAME)]

    with open(tmp_path / DRIVE_LOG_NAME) as f:
        lines = f.read().splitlines()
    assert len(lines) == 77
    header = json.loads(lines[0])
    # 1. Header echoes the fully resolved config, defaults included
    assert header["config"]["seed"] == 2017
    assert header["config"]["scenario"]["small_scale"]["ramp_ticks"] == 3
    # 2. Records carry the per-tick channel summary
    record = json.loads(lines[1])
    assert record["index"] == 0
    assert record["cluster_count"] == len(record["clusters"])


@pytest.mark.unit
def test_forced_los_approach_has_falling_path_loss():
    cfg = make_run_config(force_los_state=LosState.LOS)
    log, _ = simulate_drive(cfg)
    assert all(r.los == LosState.LOS for r in log.records)
    deterministic = [r.path_loss_db - r.shadow_fading_db for r in log.records]
    assert all(b < a for a, b in zip(deterministic, deterministic[1:]))


@pytest.mark.unit
def test_run_drive_writes_requested_artifacts(tmp_path):
    cfg = make_run_config(start_x=40.0, end_x=20.0, output_dir=str(tmp_path))
    cfg = cfg.model_copy(
        update={
            "emit": cfg.emit.model_copy(update={"pdps": True, "analysis_report": True}),
            "analysis": cfg.analysis.model_copy(update={"align_output": True}),
        }
    )
    log = run_drive(cfg)

    pdps = sorted(os.listdir(tmp_path / PDP_DIR))
    assert len(pdps) == 21
    assert pdps[0] == "tick_0000.csv"
    assert (tmp_path / REPORT_NAME).exists()
    assert log.analysis is not None
    assert len(log.analysis.locations) == 21
    assert len(log.artifacts) == 1 + 21 + 1
    with open(tmp_path / REPORT_NAME) as f:
        report = yaml.safe_load(f)
    assert report["config"]["seed"] == 2017
    assert report["config"]["update_distance"] == 1.0
    assert len(report["locations"]) == 21

    path = tmp_path / PDP_DIR / "tick_0005.csv"
    assert path.read_text().startswith("# config:")
    azimuth, pdp = read_pdp_csv(str(path))
    assert azimuth is None
    assert pdp.first_bin_delay == 0.0
    assert pdp.powers[0] > 0


@pytest.mark.unit
def test_run_drive_rejects_invalid_config(tmp_path):
    cfg = make_run_config(update_distance=20.0, output_dir=str(tmp_path))
    with pytest.raises(ConfigError) as e:
        run_drive(cfg)
    assert "update_distance" in str(e.value)
    assert not (tmp_path / DRIVE_LOG_NAME).exists()


@pytest.mark.unit
def test_validate_config_examples():
    assert validate_config(make_run_config()).valid

    result = validate_config(make_run_config(update_distance=20.0))
    assert not result.valid
    assert "correlation distance" in result.error

    result = validate_config(make_run_config().model_copy(update={"replicates": 0}))
    assert not result.valid

    # every violation is reported, not just the first
    result = validate_config(make_run_config(update_distance=20.0, carrier_frequency=200e9, lambda_c=-1.0))
    assert len(result.errors) == 3


@pytest.mark.unit
def test_replicate_seeds():
    cfg = make_run_config().model_copy(update={"replicates": 5})
    seeds = replicate_seeds(cfg)
    assert len(set(seeds)) == 5
    assert seeds == replicate_seeds(cfg)

    fixed = cfg.model_copy(update={"replicate_seed_mode": "fixed"})
    assert replicate_seeds(fixed) == [2017] * 5


@pytest.mark.asyncio
async def test_monte_carlo_summary():
    cfg = make_run_config(start_x=40.0, end_x=20.0).model_copy(update={"replicates": 4, "workers": 2})
    summary = await ChannelSimulator(cfg).run_monte_carlo()

    assert summary.replicates == 4
    assert summary.seeds == replicate_seeds(cfg)
    assert len(summary.ticks) == 21
    assert summary.tick_events > 0
    assert summary.expected_event_rate == pytest.approx(1.0 - np.exp(-0.2))
    assert all(0.0 <= v <= 1.0 for v in summary.los_fraction_by_distance.values())
    assert summary.median_cluster_run_length >= 1.0


@pytest.mark.asyncio
async def test_fixed_seed_replicates_have_no_spread():
    cfg = make_run_config(start_x=30.0, end_x=20.0).model_copy(
        update={"replicates": 3, "replicate_seed_mode": "fixed"}
    )
    summary = await ChannelSimulator(cfg).run_monte_carlo()
    for tick in summary.ticks:
        assert tick.path_loss_std == pytest.approx(0.0, abs=1e-9)
        assert tick.cluster_count_std == 0.0
        assert tick.rms_delay_spread_std == pytest.approx(0.0, abs=1e-15)


@pytest.mark.asyncio
async def test_monte_carlo_needs_two_replicates():
    cfg = make_run_config().model_copy(update={"replicates": 1})
    with pytest.raises(InvalidInputError):
        await ChannelSimulator(cfg).run_monte_carlo()


@pytest.mark.statistical
def test_monte_carlo_event_rate():
    """lambda_c = 0.8 at 1 s ticks, 10^5 pooled tick-events: rate near 1 - exp(-0.8)."""
    cfg = make_run_config(
        start_x=20.0,
        end_x=1020.0,
        lambda_c=0.8,
        force_los_state=LosState.NLOS,
    ).model_copy(update={"replicates": 100})
    summary = run_monte_carlo(cfg)
    print(f"event rate {summary.event_rate:.4f} over {summary.tick_events} ticks")
    assert summary.tick_events == 100_000
    assert summary.event_rate == pytest.approx(0.5507, abs=0.01)


@pytest.mark.unit
def test_route_analysis_leaves_out_short_final_step(tmp_path):
    """40 m to 20.5 m at 1 m ticks ends on a 0.5 m step, which does not fit the report spacing."""
    cfg = make_run_config(start_x=40.0, end_x=20.5, output_dir=str(tmp_path))
    cfg = cfg.model_copy(update={"emit": cfg.emit.model_copy(update={"analysis_report": True})})
    log = run_drive(cfg)

    print(f"{len(log.records)} ticks, {len(log.analysis.locations)} report locations")
    assert len(log.records) == 21
    assert len(log.analysis.locations) == 20
    assert log.analysis.locations[-1].location == "tick_0019"
    assert log.analysis.spacing == 1.0


@pytest.mark.unit
def test_drive_cells_agree_with_position_queries():
    """The drive's cell lookups give the same parameters as asking by position."""
    cfg = make_run_config()
    sc = cfg.scenario
    fields = FieldBank(cfg.seed)
    asked = []

    def lsp_source(cell, los):
        asked.append(cell)
        return lsp_for_grid(cell, los, sc, fields)

    log, _ = simulate_drive(cfg, lsp_source=lsp_source)

    # 1. Every cell the drive asked for is a cell it reported
    cells = {(r.cell.i, r.cell.j) for r in log.records}
    assert {(c.i, c.j) for c in asked} <= cells
    assert len(cells) > 1
    # 2. Per tick, the reported cell matches the position query
    for r in log.records:
        assert lsp_at(r.position, r.los, sc, fields) == lsp_for_grid(r.cell, r.los, sc, fields)
