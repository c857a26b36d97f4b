import asyncio
import json
import logging
import math
import os
from collections import defaultdict
from typing import Dict, List, Optional, Tuple

import numpy as np

from .analysis import (
    align_to_first_arrival,
    analyze_route,
    cir_to_pdp,
    run_lengths,
    write_pdp_csv,
    write_report,
)
from .channel import LspSource, RouteContext, birth_death_probability, init_channel, rms_spread, step
from .config import RunConfig, config_echo, validate_config
from .drift import get_drift
from .errors import ConfigError, InvalidInputError
from .fields import STREAM_CHANNEL, FieldBank, seed_sequence
from .geometry import build_update_schedule, grid_of, tick_period, tr_separation
from .large_scale import los_state_along, lsp_for_grid, shadow_fading_along
from .providers import SimulatedSweepProvider
from .types import (
    ChannelState,
    Cir,
    ClusterSummary,
    DriveLog,
    LosState,
    MonteCarloSummary,
    TickRecord,
    TickStatistics,
)

logger = logging.getLogger(__name__)

DRIVE_LOG_NAME = "drive_log.jsonl"
REPORT_NAME = "analysis_report.yml"
PDP_DIR = "pdps"
# Birth/death events that count towards the Poisson rate; flips are forced
POISSON_EVENTS = ("birth", "death", "replacement")
LOS_FRACTION_BIN = 5.0  # meters

__all__ = [
    "ChannelSimulator",
    "simulate_drive",
    "run_drive",
    "run_monte_carlo",
    "replicate_seeds",
    "summarize_replicates",
    "validate_config",
]


def _record(tick, state: ChannelState, cir: Cir, tx, sf: float) -> TickRecord:
    clusters = [
        ClusterSummary(
            id=c.id,
            delay=float(c.delays[int(np.argmax(c.powers))]),
            power=c.power,
            ramp=c.ramp,
        )
        for c in state.clusters
    ]
    return TickRecord(
        index=tick.index,
        time=tick.time,
        position=tick.position,
        cell=state.current_cell,
        los=state.los,
        tr_separation=tr_separation(tx, tick.position),
        path_loss_db=cir.path_loss_db,
        shadow_fading_db=sf,
        cluster_count=state.cluster_count,
        clusters=clusters,
        rms_delay_spread=rms_spread(cir.delays, cir.tap_powers),
        in_transition=state.in_transition,
        event=state.last_event,
    )


def simulate_drive(
    cfg: RunConfig, seed: Optional[int] = None, lsp_source: Optional[LspSource] = None
) -> Tuple[DriveLog, List[Cir]]:
    """
    Run one drive in memory: schedule, LOS sequence, along-route shadow
    fading, then the per-tick channel step. Nothing is written to disk.
    """
    seed = cfg.seed if seed is None else seed
    sc = cfg.scenario
    fields = FieldBank(seed)
    rng = np.random.default_rng(seed_sequence(seed, STREAM_CHANNEL))

    ticks = build_update_schedule(cfg.trajectory, cfg.update_distance)
    los_states = los_state_along(ticks, cfg.tx, sc, fields)
    shadow = shadow_fading_along(ticks, sc, fields)
    if lsp_source is None:

        def lsp_source(cell, los):
            return lsp_for_grid(cell, los, sc, fields)

    route = RouteContext(
        tx=cfg.tx,
        los_states=los_states,
        shadow_fading_db=shadow,
        lsp_source=lsp_source,
        drift=get_drift(sc.small_scale.angle_drift),
    )

    first = ticks[0]
    cell = grid_of(first.position, sc.correlation_distance_cluster_count, sc.grid_origin)
    state = init_channel(
        lsp_source(cell, los_states[0]), los_states[0], cfg.tx, first.position, sc, rng, t0=first.time
    )

    records, cirs = [], []
    prev = None
    for tick in ticks:
        state, cir = step(state, tick, prev, route, sc, rng)
        los = route.los_states[tick.index]
        records.append(_record(tick, state, cir, cfg.tx, shadow[los][tick.index]))
        cirs.append(cir)
        prev = tick

    echo = config_echo(cfg.model_copy(update={"seed": seed}))
    logger.debug(f"Drive with seed {seed}: {len(records)} ticks")
    return DriveLog(config=echo, records=records), cirs


def _write_drive_log(path: str, log: DriveLog) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        f.write(json.dumps({"config": log.config}) + "\n")
        for record in log.records:
            f.write(record.model_dump_json() + "\n")
    return path


def _evenly_spaced(cirs: List[Cir], cfg: RunConfig) -> List[Cir]:
    """Locations at the update spacing; a shorter final step at the route end is left out."""
    if len(cirs) < 2:
        return cirs
    last_step = (cirs[-1].timestamp - cirs[-2].timestamp) * cfg.trajectory.speed
    if last_step < cfg.update_distance * (1.0 - 1e-6):
        logger.info(f"Final location is {last_step:.3f} m from the previous one, leaving it out of the route analysis")
        return cirs[:-1]
    return cirs


def run_drive(cfg: RunConfig, lsp_source: Optional[LspSource] = None) -> DriveLog:
    """Validate, simulate one drive and write the artifacts requested in cfg.emit."""
    validation = validate_config(cfg)
    if not validation.valid:
        raise ConfigError(validation.errors)

    log, cirs = simulate_drive(cfg, lsp_source=lsp_source)
    artifacts = []
    an = cfg.analysis

    if cfg.emit.drive_log:
        artifacts.append(_write_drive_log(os.path.join(cfg.output_dir, DRIVE_LOG_NAME), log))

    if cfg.emit.pdps:
        header = {"config": log.config, "min_void_ns": an.min_void * 1e9, "threshold_db": an.threshold_db}
        for cir in cirs:
            pdp = cir_to_pdp(cir, an.bin_width)
            if an.align_output:
                pdp = align_to_first_arrival(pdp)
            path = os.path.join(cfg.output_dir, PDP_DIR, f"tick_{cir.tick_index:04d}.csv")
            artifacts.append(write_pdp_csv(path, pdp, header=header))

    if cfg.emit.analysis_report:
        provider = SimulatedSweepProvider(_evenly_spaced(cirs, cfg), an.bin_width, an.beamwidth_deg)
        log.analysis = analyze_route(provider, cfg.update_distance, an)
        path = os.path.join(cfg.output_dir, REPORT_NAME)
        artifacts.append(write_report(path, log.analysis, log.config))

    log.artifacts = artifacts
    logger.info(f"Drive finished: {len(log.records)} ticks, {len(artifacts)} artifacts in {cfg.output_dir}")
    return log


def replicate_seeds(cfg: RunConfig) -> List[int]:
    """Per-replicate seeds derived deterministically from the master seed."""
    if cfg.replicate_seed_mode == "fixed":
        return [cfg.seed] * cfg.replicates
    children = np.random.SeedSequence(cfg.seed % 2**64).spawn(cfg.replicates)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _distance_bin(d: float) -> str:
    lo = math.floor(d / LOS_FRACTION_BIN) * LOS_FRACTION_BIN
    return f"{lo:g}-{lo + LOS_FRACTION_BIN:g}"


def summarize_replicates(cfg: RunConfig, seeds: List[int], logs: List[DriveLog]) -> MonteCarloSummary:
    """Ensemble statistics over replicate drives that share one schedule."""
    n_ticks = min(len(log.records) for log in logs)
    ticks = []
    for k in range(n_ticks):
        rows = [log.records[k] for log in logs]
        pl = np.array([r.path_loss_db for r in rows])
        count = np.array([r.cluster_count for r in rows], dtype=float)
        spread = np.array([r.rms_delay_spread for r in rows])
        ticks.append(
            TickStatistics(
                index=k,
                path_loss_mean=float(pl.mean()),
                path_loss_std=float(pl.std()),
                cluster_count_mean=float(count.mean()),
                cluster_count_std=float(count.std()),
                rms_delay_spread_mean=float(spread.mean()),
                rms_delay_spread_std=float(spread.std()),
            )
        )

    period = tick_period(cfg.trajectory.speed, cfg.update_distance)
    trials = events = 0
    los_hits: Dict[str, List[int]] = defaultdict(lambda: [0, 0])
    runs: List[int] = []
    for log in logs:
        records = log.records
        for prev, rec in zip(records, records[1:]):
            if rec.los != prev.los or not math.isclose(rec.time - prev.time, period):
                continue
            trials += 1
            if rec.event is not None and rec.event.kind in POISSON_EVENTS:
                events += 1
        for rec in records:
            hits = los_hits[_distance_bin(rec.tr_separation)]
            hits[0] += rec.los == LosState.LOS
            hits[1] += 1
        runs.extend(run_lengths([r.cluster_count for r in records]))

    los_fraction = {
        key: hits[0] / hits[1]
        for key, hits in sorted(los_hits.items(), key=lambda kv: float(kv[0].split("-")[0]))
    }
    return MonteCarloSummary(
        replicates=len(logs),
        seeds=seeds,
        ticks=ticks,
        event_rate=events / trials if trials else 0.0,
        expected_event_rate=birth_death_probability(period, cfg.scenario.lambda_c),
        tick_events=trials,
        los_fraction_by_distance=los_fraction,
        median_cluster_run_length=float(np.median(runs)) if runs else 0.0,
    )


class ChannelSimulator:
    """Facade over one run config: single drives and Monte Carlo batches."""

    def __init__(self, cfg: RunConfig, lsp_source: Optional[LspSource] = None):
        self.cfg = cfg
        self.lsp_source = lsp_source

    def validate(self):
        return validate_config(self.cfg)

    def simulate(self, seed: Optional[int] = None) -> Tuple[DriveLog, List[Cir]]:
        return simulate_drive(self.cfg, seed=seed, lsp_source=self.lsp_source)

    def run_drive(self) -> DriveLog:
        return run_drive(self.cfg, lsp_source=self.lsp_source)

    def _replicate(self, seed: int) -> DriveLog:
        log, _ = simulate_drive(self.cfg, seed=seed, lsp_source=self.lsp_source)
        return log

    async def run_monte_carlo(self) -> MonteCarloSummary:
        cfg = self.cfg
        if cfg.replicates < 2:
            raise InvalidInputError(f"Monte Carlo needs at least 2 replicates, got {cfg.replicates}")
        validation = validate_config(cfg)
        if not validation.valid:
            raise ConfigError(validation.errors)

        seeds = replicate_seeds(cfg)
        semaphore = asyncio.Semaphore(cfg.workers)

        async def run_one(seed: int) -> DriveLog:
            async with semaphore:
                # Drives are CPU-bound and independent; keep the loop free
                return await asyncio.to_thread(self._replicate, seed)

        logs = await asyncio.gather(*(run_one(s) for s in seeds))
        summary = summarize_replicates(cfg, seeds, list(logs))
        logger.info(
            f"Monte Carlo: {summary.replicates} replicates, event rate {summary.event_rate:.4f} "
            f"(expected {summary.expected_event_rate:.4f})"
        )
        return summary


def run_monte_carlo(cfg: RunConfig, lsp_source: Optional[LspSource] = None) -> MonteCarloSummary:
    return asyncio.run(ChannelSimulator(cfg, lsp_source=lsp_source).run_monte_carlo())
