import os

import pytest
import yaml

from spatial_channel_sim.analysis import sector_sweeps, write_pdp_csv
from spatial_channel_sim.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, MONTE_CARLO_NAME, main
from spatial_channel_sim.simulator import DRIVE_LOG_NAME, REPORT_NAME, simulate_drive

from .test_data import make_run_config


@pytest.fixture
def config_file(tmp_path):
    cfg = make_run_config(start_x=35.0, end_x=20.0, output_dir=str(tmp_path / "out"))
    path = tmp_path / "run.yml"
    path.write_text(yaml.safe_dump(cfg.model_dump(mode="json")))
    return str(path)


@pytest.mark.unit
def test_validate_command(config_file, capsys):
    assert main(["validate", "-c", config_file]) == EXIT_OK
    assert "valid" in capsys.readouterr().out

    code = main(["validate", "-c", config_file, "--set", "update_distance=20"])
    assert code == EXIT_CONFIG
    assert "update_distance" in capsys.readouterr().err


@pytest.mark.unit
def test_run_command_writes_drive_log(config_file, tmp_path):
    out = tmp_path / "drive"
    code = main(["run", "-c", config_file, "--output-dir", str(out), "--seed", "5", "--analysis"])
    assert code == EXIT_OK
    assert (out / DRIVE_LOG_NAME).exists()
    assert (out / REPORT_NAME).exists()
    assert not (out / "pdps").exists()


@pytest.mark.unit
def test_run_command_config_errors(tmp_path):
    assert main(["run", "-c", str(tmp_path / "missing.yml")]) == EXIT_CONFIG
    bad = tmp_path / "bad.yml"
    bad.write_text("trajectory: {speed: 1.0}\n")
    assert main(["run", "-c", str(bad)]) == EXIT_CONFIG


@pytest.mark.unit
def test_mc_command(config_file, tmp_path):
    out = tmp_path / "mc"
    code = main(["mc", "-c", config_file, "--replicates", "2", "--output-dir", str(out)])
    assert code == EXIT_OK
    with open(out / MONTE_CARLO_NAME) as f:
        result = yaml.safe_load(f)
    assert result["summary"]["replicates"] == 2
    assert result["config"]["replicates"] == 2


@pytest.mark.unit
def test_analyze_command(config_file, tmp_path):
    # 1. Export emulated sweeps of a short drive as CSV files
    cfg = make_run_config(start_x=35.0, end_x=20.0)
    _, cirs = simulate_drive(cfg)
    sweeps_dir = tmp_path / "sweeps"
    for cir in cirs:
        for sweep in sector_sweeps(cir, cfg.analysis.bin_width):
            name = f"az_{sweep.azimuth:05.1f}.csv"
            write_pdp_csv(str(sweeps_dir / f"rx_{cir.tick_index:02d}" / name), sweep.pdp, azimuth=sweep.azimuth)

    # 2. Analyse them from the command line
    out = tmp_path / "analysis"
    code = main(["analyze", str(sweeps_dir), "--spacing", "1", "-c", config_file, "--output-dir", str(out)])
    assert code == EXIT_OK
    with open(out / REPORT_NAME) as f:
        report = yaml.safe_load(f)
    assert len(report["locations"]) == len(cirs)
    assert report["spacing"] == 1.0
    # 3. The report leads with the resolved config
    assert list(report)[0] == "config"
    assert report["config"]["analysis"]["average_repeated_sweeps"] is True


@pytest.mark.unit
def test_analyze_missing_directory_is_a_runtime_error(config_file, tmp_path):
    code = main(["analyze", str(tmp_path / "nowhere"), "-c", config_file, "--output-dir", str(tmp_path)])
    assert code == EXIT_RUNTIME
    assert not os.path.exists(tmp_path / REPORT_NAME)
