import math

import numpy as np
import pytest

from spatial_channel_sim.analysis import (
    align_to_first_arrival,
    average_sweeps,
    cir_to_pdp,
    count_time_clusters,
    denoise,
    estimate_correlation_distance,
    median_run_length,
    read_pdp_csv,
    rms_delay_spread,
    run_lengths,
    sector_sweeps,
    synthesize_omni,
    total_power_dbm,
    write_pdp_csv,
)
from spatial_channel_sim.errors import InvalidInputError, UndefinedStatisticError
from spatial_channel_sim.fields import sample_ou_path
from spatial_channel_sim.simulator import simulate_drive
from spatial_channel_sim.types import (
    Cir,
    CorrelatedFieldSpec,
    DirectionalPdp,
    LosState,
    Pdp,
    Position,
    RouteSeries,
)

from .test_data import PAIRED_CLUSTER_COUNTS, make_run_config

NS = 1e-9
BIN = 2 * NS


def _cir(delays, powers, aoa_az=None) -> Cir:
    n = len(delays)
    zeros = np.zeros(n)
    return Cir(
        timestamp=0.0,
        tick_index=0,
        rx=Position(x=0.0, y=0.0),
        path_loss_db=0.0,
        amplitudes=np.sqrt(np.asarray(powers, dtype=float)).astype(complex),
        delays=np.asarray(delays, dtype=float),
        aoa_az=zeros if aoa_az is None else np.asarray(aoa_az, dtype=float),
        aoa_el=zeros,
        aod_az=zeros,
        aod_el=zeros,
        cluster_ids=np.zeros(n, dtype=int),
    )


def _pdp(powers, first=0.0) -> Pdp:
    return Pdp(bin_width=BIN, first_bin_delay=first, powers=list(powers))


@pytest.mark.unit
def test_cir_to_pdp_binning():
    single = cir_to_pdp(_cir([100 * NS], [0.3]), BIN)
    assert single.powers == pytest.approx([0.3])
    assert single.first_bin_delay == pytest.approx(100 * NS)

    same_bin = cir_to_pdp(_cir([100 * NS, 101 * NS], [0.3, 0.2]), BIN)
    assert same_bin.powers == pytest.approx([0.5])

    split = cir_to_pdp(_cir([100 * NS, 103 * NS], [0.3, 0.2]), BIN)
    assert np.count_nonzero(split.as_array()) == 2

    with pytest.raises(InvalidInputError):
        cir_to_pdp(_cir([100 * NS], [1.0]), 0.0)


@pytest.mark.unit
def test_cir_to_pdp_on_shared_grid():
    pdp = cir_to_pdp(_cir([100 * NS, 103 * NS], [0.3, 0.2]), BIN, first_bin_delay=90 * NS, n_bins=10)
    assert len(pdp.powers) == 10
    assert pdp.powers[5] == pytest.approx(0.3)
    assert pdp.powers[6] == pytest.approx(0.2)
    with pytest.raises(InvalidInputError):
        cir_to_pdp(_cir([100 * NS], [1.0]), BIN, first_bin_delay=110 * NS, n_bins=4)


@pytest.mark.unit
def test_denoise_threshold():
    pdp = _pdp([1.0, 10 ** -1.9, 10 ** -2.1, 0.0])
    cleaned = denoise(pdp, 20.0)
    assert cleaned.powers == pytest.approx([1.0, 10 ** -1.9, 0.0, 0.0])
    assert cleaned.noise_floor == pytest.approx(0.01)

    uniform = _pdp([0.4] * 5)
    assert denoise(uniform).powers == uniform.powers

    assert denoise(denoise(pdp)).powers == cleaned.powers
    assert denoise(_pdp([0.0, 0.0])).powers == [0.0, 0.0]
    with pytest.raises(InvalidInputError):
        denoise(pdp, 0.0)


@pytest.mark.unit
def test_synthesize_omni():
    a = DirectionalPdp(azimuth=0.0, pdp=_pdp([0.0, 2.0, 0.0]))
    b = DirectionalPdp(azimuth=15.0, pdp=_pdp([0.0, 2.0, 1.0]))
    assert synthesize_omni([a, b]).powers == pytest.approx([0.0, 4.0, 1.0])
    assert synthesize_omni([b, a]).powers == synthesize_omni([a, b]).powers

    empties = [DirectionalPdp(azimuth=15.0 * k, pdp=_pdp([0.0, 0.0, 0.0])) for k in range(1, 24)]
    assert synthesize_omni([a] + empties).powers == a.pdp.powers

    # a shorter sweep has no power past its last bin
    short = DirectionalPdp(azimuth=30.0, pdp=_pdp([1.0]))
    assert synthesize_omni([short, b]).powers == pytest.approx([1.0, 2.0, 1.0])

    shifted = DirectionalPdp(azimuth=30.0, pdp=_pdp([1.0, 1.0, 1.0], first=4 * NS))
    with pytest.raises(InvalidInputError):
        synthesize_omni([a, shifted])
    with pytest.raises(InvalidInputError):
        synthesize_omni([])


@pytest.mark.unit
def test_sector_sweeps_conserve_power():
    """24 ideal 15 degree sectors rebuild the CIR's total power."""
    rng = np.random.default_rng(3)
    n = 40
    cir = _cir(
        100 * NS + rng.uniform(0, 300 * NS, n),
        rng.exponential(1.0, n),
        aoa_az=rng.uniform(0.0, 360.0, n),
    )
    sweeps = sector_sweeps(cir, BIN, 15.0)
    assert len(sweeps) == 24
    assert [s.azimuth for s in sweeps] == pytest.approx([15.0 * k for k in range(24)])

    omni = synthesize_omni(sweeps)
    assert omni.as_array().sum() == pytest.approx(cir.total_power, rel=1e-6)
    assert omni.powers == pytest.approx(cir_to_pdp(cir, BIN).powers)

    with pytest.raises(InvalidInputError):
        sector_sweeps(cir, BIN, 7.0)


@pytest.mark.unit
def test_sector_edges():
    """A tap at 7.5 degrees opens sector 15; one at 359 degrees belongs to sector 0."""
    cir = _cir([100 * NS, 100 * NS], [1.0, 2.0], aoa_az=[7.5, 359.0])
    sweeps = {s.azimuth: s.pdp.as_array().sum() for s in sector_sweeps(cir, BIN)}
    assert sweeps[15.0] == pytest.approx(1.0)
    assert sweeps[0.0] == pytest.approx(2.0)


@pytest.mark.unit
def test_count_time_clusters():
    impulse = np.zeros(100)
    impulse[10] = 1.0
    assert count_time_clusters(_pdp(impulse), 25 * NS) == 1

    far = impulse.copy()
    far[60] = 1.0  # 100 ns later
    assert count_time_clusters(_pdp(far), 25 * NS) == 2

    near = impulse.copy()
    near[15] = 1.0  # 10 ns later
    assert count_time_clusters(_pdp(near), 25 * NS) == 1

    assert count_time_clusters(_pdp(np.zeros(5)), 25 * NS) == 0


@pytest.mark.unit
def test_rms_delay_spread():
    assert rms_delay_spread(_pdp([0.0, 1.0, 0.0])) == 0.0

    two = _pdp([1.0, 0.0, 0.0, 0.0, 0.0, 1.0])  # 10 ns apart
    assert rms_delay_spread(two) == pytest.approx(5 * NS)

    p = [0.2, 0.0, 1.3, 0.7]
    assert rms_delay_spread(_pdp([7.0 * v for v in p])) == pytest.approx(rms_delay_spread(_pdp(p)))

    with pytest.raises(UndefinedStatisticError):
        rms_delay_spread(_pdp([0.0, 0.0]))


@pytest.mark.unit
def test_align_and_total_power():
    pdp = _pdp([0.0, 0.0, 1e-3, 0.0, 1e-3], first=100 * NS)
    aligned = align_to_first_arrival(pdp)
    assert aligned.first_bin_delay == 0.0
    assert aligned.powers == [1e-3, 0.0, 1e-3]

    assert total_power_dbm(_pdp([1.0])) == pytest.approx(0.0)
    assert total_power_dbm(_pdp([0.0])) is None


@pytest.mark.unit
def test_average_sweeps():
    first = [DirectionalPdp(azimuth=0.0, pdp=_pdp([1.0, 0.0])), DirectionalPdp(azimuth=15.0, pdp=_pdp([0.0, 2.0]))]
    second = [DirectionalPdp(azimuth=0.0, pdp=_pdp([3.0, 0.0])), DirectionalPdp(azimuth=15.0, pdp=_pdp([0.0, 4.0]))]
    averaged = average_sweeps([first, second])
    assert [s.azimuth for s in averaged] == [0.0, 15.0]
    assert averaged[0].pdp.powers == pytest.approx([2.0, 0.0])
    assert averaged[1].pdp.powers == pytest.approx([0.0, 3.0])
    with pytest.raises(InvalidInputError):
        average_sweeps([])


@pytest.mark.unit
def test_pdp_csv_files(tmp_path):
    pdp = _pdp([1e-6, 0.0, 3e-8], first=102 * NS)

    # 1. Directional file with metadata header
    path = write_pdp_csv(str(tmp_path / "loc" / "az_015.csv"), pdp, azimuth=15.0, header={"seed": 7})
    with open(path) as f:
        assert f.readline().startswith("# seed: 7")
    azimuth, back = read_pdp_csv(path)
    assert azimuth == 15.0
    assert back.bin_width == pytest.approx(BIN)
    assert back.first_bin_delay == pytest.approx(102 * NS)
    assert back.powers == pytest.approx(pdp.powers, rel=1e-9)

    # 2. Omnidirectional file has no azimuth
    azimuth, _ = read_pdp_csv(write_pdp_csv(str(tmp_path / "omni.csv"), pdp))
    assert azimuth is None

    # 3. Malformed files are rejected
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\nx,y\n")
    with pytest.raises(InvalidInputError):
        read_pdp_csv(str(bad))


@pytest.mark.unit
def test_pdp_csv_rows_land_on_their_delay(tmp_path):
    """Sparse and unordered rows are placed by delay_ns, not by row order."""
    head = "bin_width_ns,first_bin_ns\n2.0,0.0\ndelay_ns,power_dbm\n"

    # 1. Sparse rows: 0 ns and 100 ns are 50 bins apart
    sparse = tmp_path / "sparse.csv"
    sparse.write_text(head + "0.0,0.0\n100.0,0.0\n")
    _, pdp = read_pdp_csv(str(sparse))
    print(f"sparse: {len(pdp.powers)} bins")
    assert len(pdp.powers) == 51
    assert pdp.powers[0] == pytest.approx(1.0)
    assert pdp.powers[50] == pytest.approx(1.0)
    assert sum(pdp.powers) == pytest.approx(2.0)
    assert pdp.delays[50] == pytest.approx(100 * NS)

    # 2. Out-of-order rows
    shuffled = tmp_path / "shuffled.csv"
    shuffled.write_text(head + "4.0,-10.0\n0.0,0.0\n2.0,-inf\n")
    _, pdp = read_pdp_csv(str(shuffled))
    assert pdp.powers == pytest.approx([1.0, 0.0, 0.1])

    # 3. Off-grid, early and repeated delays are rejected
    for rows in ("3.0,0.0\n", "-2.0,0.0\n", "2.0,0.0\n2.0,-3.0\n"):
        bad = tmp_path / "bad.csv"
        bad.write_text(head + rows)
        with pytest.raises(InvalidInputError):
            read_pdp_csv(str(bad))


@pytest.mark.unit
def test_run_lengths():
    assert run_lengths(PAIRED_CLUSTER_COUNTS) == [2] * 6
    assert run_lengths([1, 2, 2, 2]) == [1, 3, 3, 3]
    assert median_run_length(PAIRED_CLUSTER_COUNTS) == 2.0
    assert median_run_length([1, 2, 2, 2]) == 3.0
    with pytest.raises(InvalidInputError):
        median_run_length([])


@pytest.mark.unit
def test_correlation_distance_edge_cases():
    rng = np.random.default_rng(5)
    white = RouteSeries(spacing=5.0, values=rng.standard_normal(200).tolist())
    assert estimate_correlation_distance(white) <= 5.0

    assert math.isinf(estimate_correlation_distance(RouteSeries(spacing=5.0, values=[3.0] * 12)))

    with pytest.raises(InvalidInputError):
        estimate_correlation_distance(RouteSeries(spacing=5.0, values=[1.0, 2.0] * 4))


@pytest.mark.unit
def test_correlation_distance_of_paired_counts():
    """Cluster counts constant over pairs of 5 m locations decorrelate within 5-10 m."""
    series = RouteSeries(spacing=5.0, values=[float(v) for v in PAIRED_CLUSTER_COUNTS * 20])
    estimate = estimate_correlation_distance(series)
    print(f"paired-count correlation distance: {estimate:.2f} m")
    assert 5.0 <= estimate <= 10.0


@pytest.mark.statistical
def test_correlation_distance_round_trip():
    """Exponentially correlated series with d_corr = 7.5 m, sampled every 1 m over 10^4 steps."""
    positions = [Position(x=float(k), y=0.0) for k in range(10_000)]
    estimates = []
    for seed in range(5):
        spec = CorrelatedFieldSpec(correlation_distance=7.5, global_seed=seed, field_id=1)
        series = RouteSeries(spacing=1.0, values=sample_ou_path(positions, spec))
        estimates.append(estimate_correlation_distance(series))
    print(f"estimates: {[round(e, 2) for e in estimates]}")
    assert float(np.median(estimates)) == pytest.approx(7.5, abs=1.0)


@pytest.mark.statistical
def test_cluster_count_recovered_from_pdps():
    """
    Drives with clusters far apart in delay: binning, 20 dB denoising and the
    25 ns void rule recover the true cluster count outside ramp windows.
    """
    cfg = make_run_config(
        start_x=40.0,
        end_x=20.0,
        force_los_state=LosState.NLOS,
        subpaths_per_cluster={"low": 1, "high": 2},
        small_scale={
            "cluster_decay_ratio": 1000.0,
            "cluster_shadowing_db": 0.0,
            "min_cluster_gap": 300e-9,
        },
    )
    hits = total = 0
    for seed in range(20):
        log, cirs = simulate_drive(cfg, seed=seed)
        for record, cir in zip(log.records, cirs):
            if record.in_transition:
                continue
            pdp = denoise(cir_to_pdp(cir, cfg.analysis.bin_width), 20.0)
            total += 1
            hits += count_time_clusters(pdp, 25 * NS) == record.cluster_count
    print(f"recovered {hits}/{total}")
    assert total > 0
    assert hits / total >= 0.95
