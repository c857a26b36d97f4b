import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.constants import speed_of_light
from scipy.optimize import brentq

from .config import ScenarioConfig, SmallScaleConfig
from .drift import MIN_SCATTERER_RANGE, AngleDrift, ScattererDrift, unit_vectors
from .errors import InvalidInputError, SimulationError
from .geometry import direction_angles, grid_of, tr_separation
from .large_scale import path_loss_db
from .types import (
    ChannelState,
    Cir,
    ClusterEvent,
    GridIndex,
    LargeScaleParams,
    LosState,
    Position,
    TimeCluster,
    UpdateTick,
)

logger = logging.getLogger(__name__)

LspSource = Callable[[GridIndex, LosState], LargeScaleParams]

# Redraws allowed when placing a new cluster clear of its neighbours
_PLACEMENT_ATTEMPTS = 100


class RouteContext(BaseModel):
    """Per-drive inputs that stay fixed while the channel evolves."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    tx: Position
    los_states: List[LosState]
    shadow_fading_db: Dict[LosState, List[float]]
    lsp_source: LspSource
    drift: AngleDrift = ScattererDrift()


def birth_death_probability(delta_t: float, lambda_c: float) -> float:
    """Pr(t) = 1 - exp(-lambda_c * (t - t0))."""
    if delta_t < 0 or lambda_c < 0:
        raise InvalidInputError(
            f"elapsed time and event rate must be non-negative, got {delta_t}, {lambda_c}"
        )
    return -math.expm1(-lambda_c * delta_t)


def rms_spread(delays: np.ndarray, powers: np.ndarray) -> float:
    total = powers.sum()
    if total <= 0:
        return 0.0
    mean = (powers * delays).sum() / total
    return float(math.sqrt(max((powers * delays**2).sum() / total - mean**2, 0.0)))


def weakest_cluster(clusters: List[TimeCluster]) -> Optional[TimeCluster]:
    """Live non-LOS cluster with the lowest intrinsic power."""
    candidates = [c for c in clusters if not c.dying and not c.is_los]
    if not candidates:
        return None
    return min(candidates, key=lambda c: c.intrinsic_power)


def _draw_offsets(n: int, ss: SmallScaleConfig, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Intra-cluster delay offsets (first at zero) and their power shares."""
    offsets = np.concatenate([[0.0], rng.exponential(ss.intra_cluster_delay_mean, n - 1)])
    shares = np.exp(-offsets / ss.intra_cluster_delay_mean)
    return offsets, shares / shares.sum()


def _cluster_power(x: float, ss: SmallScaleConfig, rng: np.random.Generator) -> float:
    z = rng.normal(0.0, ss.cluster_shadowing_db) if ss.cluster_shadowing_db > 0 else 0.0
    return math.exp(-x / ss.cluster_decay_ratio) * 10.0 ** (z / 10.0)


def _draw_cluster(
    cluster_id: int,
    base_delay: float,
    power: float,
    offsets: np.ndarray,
    shares: np.ndarray,
    lobe: int,
    aoa_centre: float,
    aod_centre: float,
    birth_tick: int,
    ss: SmallScaleConfig,
    rng: np.random.Generator,
    ramp: float = 1.0,
    ramp_direction: int = 0,
) -> TimeCluster:
    n = len(offsets)
    return TimeCluster(
        id=cluster_id,
        base_delay=base_delay,
        birth_tick=birth_tick,
        ramp=ramp,
        ramp_direction=ramp_direction,
        lobe=lobe,
        delays=base_delay + offsets,
        powers=power * shares,
        aoa_az=(aoa_centre + rng.normal(0.0, ss.subpath_angle_std, n)) % 360.0,
        aoa_el=np.clip(rng.normal(0.0, ss.elevation_spread, n), -90.0, 90.0),
        aod_az=(aod_centre + rng.normal(0.0, ss.subpath_angle_std, n)) % 360.0,
        aod_el=np.clip(rng.normal(0.0, ss.elevation_spread, n), -90.0, 90.0),
        phases=rng.uniform(0.0, 2.0 * math.pi, n),
    )


def _with_direct_ray(cluster: TimeCluster, tx: Position, rx: Position, power: float) -> TimeCluster:
    """Turn subpath 0 into the geometric direct ray; the other subpaths keep their offsets."""
    delays = cluster.delays - cluster.delays[0] + tr_separation(tx, rx) / speed_of_light
    powers = cluster.powers.copy()
    aoa_az, aoa_el, aod_az, aod_el = (
        cluster.aoa_az.copy(),
        cluster.aoa_el.copy(),
        cluster.aod_az.copy(),
        cluster.aod_el.copy(),
    )
    powers[0] = power
    aoa_az[0], aoa_el[0] = direction_angles(rx, tx)
    aod_az[0], aod_el[0] = direction_angles(tx, rx)
    return cluster.model_copy(
        update={
            "is_los": True,
            "base_delay": float(delays[0]),
            "delays": delays,
            "powers": powers,
            "aoa_az": aoa_az,
            "aoa_el": aoa_el,
            "aod_az": aod_az,
            "aod_el": aod_el,
        }
    )


def _on_direct_path(cluster: TimeCluster, direct_length: float) -> np.ndarray:
    """Subpaths no longer than the direct path; they have no scatterer of their own."""
    mask = speed_of_light * cluster.delays - direct_length < MIN_SCATTERER_RANGE
    if cluster.is_los:
        mask[0] = True
    return mask


def _align_direct_subpaths(cluster: TimeCluster, tx: Position, rx: Position) -> TimeCluster:
    mask = _on_direct_path(cluster, tr_separation(tx, rx))
    if not mask.any():
        return cluster
    aoa_az, aoa_el = cluster.aoa_az.copy(), cluster.aoa_el.copy()
    aod_az, aod_el = cluster.aod_az.copy(), cluster.aod_el.copy()
    aoa_az[mask], aoa_el[mask] = direction_angles(rx, tx)
    aod_az[mask], aod_el[mask] = direction_angles(tx, rx)
    return cluster.model_copy(
        update={"aoa_az": aoa_az, "aoa_el": aoa_el, "aod_az": aod_az, "aod_el": aod_el}
    )


def _k_factor_power(others: float, ss: SmallScaleConfig) -> float:
    return 10.0 ** (ss.los_k_factor_db / 10.0) * others if others > 0 else 1.0


def _solve_delay_scale(
    x: np.ndarray, offsets: List[np.ndarray], powers: List[np.ndarray], target: float
) -> float:
    """Delay scale s for which the realised rms spread equals target."""
    flat_p = np.concatenate(powers)

    def spread(s: float) -> float:
        d = np.concatenate([s * xn + o for xn, o in zip(x, offsets)])
        return rms_spread(d, flat_p) - target

    if len(x) < 2 or not np.any(x > 0) or spread(0.0) >= 0:
        return target
    hi = target
    for _ in range(60):
        if spread(hi) > 0:
            break
        hi *= 2.0
    else:
        return target
    return float(brentq(spread, 0.0, hi, xtol=1e-15))


def _enforce_gap(clusters: List[TimeCluster], gap: float) -> List[TimeCluster]:
    """Push clusters later in delay so each starts at least gap after the previous one ends."""
    if gap <= 0:
        return clusters
    ordered = sorted(clusters, key=lambda c: c.base_delay)
    result = [ordered[0]]
    for c in ordered[1:]:
        earliest = float(result[-1].delays.max()) + gap
        if c.base_delay < earliest:
            shift = earliest - c.base_delay
            c = c.model_copy(update={"base_delay": earliest, "delays": c.delays + shift})
        result.append(c)
    return result


def init_channel(
    lsp: LargeScaleParams,
    los: LosState,
    tx: Position,
    rx: Position,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    t0: float = 0.0,
    tick_index: int = 0,
) -> ChannelState:
    """
    Build the initial clusters of a drive from the LSPs of the starting cell.

    Normalised excess delays are exponential with the first cluster at the
    direct-path delay; powers decay exponentially in normalised delay with
    log-normal cluster shadowing. The delay scale is then solved so the rms
    delay spread matches the LSP target. In LOS the first subpath of the first
    cluster is the geometric direct ray, K dB above the rest. In NLOS a subpath
    at the direct-path delay arrives along the direct bearing.
    """
    ss = cfg.small_scale
    n = lsp.n_time_clusters
    reference = tr_separation(tx, rx) / speed_of_light

    x = np.concatenate([[0.0], rng.exponential(1.0, n - 1)])
    cluster_powers = [_cluster_power(float(xn), ss, rng) for xn in x]
    draws = [_draw_offsets(lsp.n_subpaths_per_cluster[k], ss, rng) for k in range(n)]
    offsets = [o for o, _ in draws]
    powers = [p * shares for p, (_, shares) in zip(cluster_powers, draws)]

    if los == LosState.LOS:
        others = sum(float(p.sum()) for p in powers) - float(powers[0][0])
        powers[0] = powers[0].copy()
        powers[0][0] = _k_factor_power(others, ss)

    scale = _solve_delay_scale(x, offsets, powers, lsp.rms_delay_spread)

    aoa_lobes = rng.uniform(0.0, 360.0, lsp.n_spatial_lobes).tolist()
    aod_lobes = rng.uniform(0.0, 360.0, lsp.n_spatial_lobes).tolist()
    clusters = []
    for k in range(n):
        lobe = int(rng.integers(lsp.n_spatial_lobes))
        cluster = _draw_cluster(
            cluster_id=k,
            base_delay=reference + scale * float(x[k]),
            power=1.0,
            offsets=offsets[k],
            shares=powers[k],
            lobe=lobe,
            aoa_centre=aoa_lobes[lobe],
            aod_centre=aod_lobes[lobe],
            birth_tick=tick_index,
            ss=ss,
            rng=rng,
        )
        if k == 0 and los == LosState.LOS:
            cluster = _with_direct_ray(cluster, tx, rx, float(powers[0][0]))
        clusters.append(_align_direct_subpaths(cluster, tx, rx))

    clusters = _enforce_gap(clusters, ss.min_cluster_gap)
    logger.debug(
        f"Initialised {n} clusters in cell ({lsp.cell.i}, {lsp.cell.j}), {los.value}, "
        f"delay scale {scale * 1e9:.2f} ns"
    )
    return ChannelState(
        clusters=clusters,
        los=los,
        last_update_time=t0,
        current_cell=lsp.cell,
        rx=rx,
        reference_delay=reference,
        delay_scale=scale,
        power_decay=ss.cluster_decay_ratio * scale,
        aoa_lobes=aoa_lobes,
        aod_lobes=aod_lobes,
        target_lsp=lsp,
        tick_index=tick_index,
        next_cluster_id=n,
    )


def _advance_ramps(clusters: List[TimeCluster], ramp_ticks: int) -> List[TimeCluster]:
    step = 1.0 / ramp_ticks
    result = []
    for c in clusters:
        if c.ramp_direction > 0:
            ramp = min(1.0, c.ramp + step)
            c = c.model_copy(update={"ramp": ramp, "ramp_direction": 0 if ramp >= 1.0 else 1})
        elif c.ramp_direction < 0:
            ramp = c.ramp - step
            if ramp <= 1e-12:
                logger.debug(f"Cluster {c.id} faded out")
                continue
            c = c.model_copy(update={"ramp": ramp})
        result.append(c)
    return result


def _retire(clusters: List[TimeCluster], cluster_id: int) -> List[TimeCluster]:
    return [
        c.model_copy(update={"ramp_direction": -1}) if c.id == cluster_id else c for c in clusters
    ]


def _place_delay(state: ChannelState, clusters: List[TimeCluster], extent: float, ss: SmallScaleConfig, rng) -> Tuple[float, float]:
    """Normalised and absolute delay for a new cluster, clear of existing ones by min_cluster_gap."""
    scale = state.delay_scale
    gap = ss.min_cluster_gap
    x = float(rng.exponential(1.0))
    if gap <= 0 or not clusters:
        return x, state.reference_delay + scale * x

    spans = [(float(c.delays.min()), float(c.delays.max())) for c in clusters]
    for _ in range(_PLACEMENT_ATTEMPTS):
        start = state.reference_delay + scale * x
        end = start + extent
        if all(end + gap <= lo or start >= hi + gap for lo, hi in spans):
            return x, start
        x = float(rng.exponential(1.0))
    start = max(hi for _, hi in spans) + gap
    x = (start - state.reference_delay) / scale if scale > 0 else x
    return x, start


def _new_cluster(
    state: ChannelState,
    clusters: List[TimeCluster],
    target: LargeScaleParams,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
) -> Tuple[TimeCluster, List[float], List[float]]:
    ss = cfg.small_scale
    live = [c for c in clusters if not c.dying]
    n_sub = target.n_subpaths_per_cluster[len(live) % len(target.n_subpaths_per_cluster)]
    offsets, shares = _draw_offsets(n_sub, ss, rng)
    x, base = _place_delay(state, clusters, float(offsets.max()), ss, rng)

    aoa_lobes = list(state.aoa_lobes)
    aod_lobes = list(state.aod_lobes)
    while len(aoa_lobes) < target.n_spatial_lobes:
        aoa_lobes.append(float(rng.uniform(0.0, 360.0)))
        aod_lobes.append(float(rng.uniform(0.0, 360.0)))
    lobe = int(rng.integers(target.n_spatial_lobes))

    cluster = _draw_cluster(
        cluster_id=state.next_cluster_id,
        base_delay=base,
        power=_cluster_power(max(x, 0.0), ss, rng),
        offsets=offsets,
        shares=shares,
        lobe=lobe,
        aoa_centre=aoa_lobes[lobe],
        aod_centre=aod_lobes[lobe],
        birth_tick=state.tick_index,
        ss=ss,
        rng=rng,
        ramp=0.0,
        ramp_direction=1,
    )
    return cluster, aoa_lobes, aod_lobes


def apply_birth_death(
    state: ChannelState,
    target_lsp: LargeScaleParams,
    t: float,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
) -> ChannelState:
    """
    One Poisson birth/death trial for the tick at time t.

    An event fires with probability 1 - exp(-lambda_c (t - t0)) and t0 becomes
    t either way. An event moves the live cluster count one step towards the
    target: a birth when below, a death of the weakest cluster when above, and
    a replacement of the weakest cluster when equal.
    """
    if t < state.last_update_time:
        raise InvalidInputError(
            f"update time {t} precedes the previous update at {state.last_update_time}"
        )
    ss = cfg.small_scale
    clusters = _advance_ramps(state.clusters, ss.ramp_ticks)
    p = birth_death_probability(t - state.last_update_time, cfg.lambda_c)
    update = {"last_update_time": t, "target_lsp": target_lsp, "last_event": None}

    if p <= 0 or rng.random() >= p:
        return state.model_copy(update={**update, "clusters": clusters})

    live = [c for c in clusters if not c.dying]
    current = len(live)
    wanted = min(target_lsp.n_time_clusters, cfg.max_time_clusters)
    weakest = weakest_cluster(clusters)
    event = None

    if current < wanted:
        born, aoa_lobes, aod_lobes = _new_cluster(state, clusters, target_lsp, cfg, rng)
        clusters = clusters + [born]
        update.update(aoa_lobes=aoa_lobes, aod_lobes=aod_lobes, next_cluster_id=born.id + 1)
        event = ClusterEvent(kind="birth", tick=state.tick_index, time=t, added_id=born.id)
    elif weakest is not None and current > wanted:
        clusters = _retire(clusters, weakest.id)
        event = ClusterEvent(kind="death", tick=state.tick_index, time=t, removed_id=weakest.id)
    elif weakest is not None:
        born, aoa_lobes, aod_lobes = _new_cluster(state, clusters, target_lsp, cfg, rng)
        clusters = _retire(clusters, weakest.id) + [born]
        update.update(aoa_lobes=aoa_lobes, aod_lobes=aod_lobes, next_cluster_id=born.id + 1)
        event = ClusterEvent(
            kind="replacement", tick=state.tick_index, time=t, added_id=born.id, removed_id=weakest.id
        )

    if event is not None:
        logger.debug(
            f"Tick {state.tick_index}: {event.kind} (added={event.added_id}, removed={event.removed_id})"
        )
    return state.model_copy(update={**update, "clusters": clusters, "last_event": event})


def apply_los_transition(
    state: ChannelState,
    los: LosState,
    tx: Position,
    target_lsp: LargeScaleParams,
    t: float,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
) -> ChannelState:
    """
    Forced event on a visibility flip, used in place of the tick's Poisson
    trial. NLOS->LOS ramps in a direct-ray cluster; when the channel is already
    at its target count the weakest cluster makes room. LOS->NLOS ramps the
    direct-ray cluster out and, if that would leave the channel below target
    or empty, ramps in a replacement.
    """
    ss = cfg.small_scale
    clusters = _advance_ramps(state.clusters, ss.ramp_ticks)
    update = {"last_update_time": t, "target_lsp": target_lsp, "los": los}
    live = [c for c in clusters if not c.dying]
    wanted = min(target_lsp.n_time_clusters, cfg.max_time_clusters)

    if los == LosState.LOS:
        born, aoa_lobes, aod_lobes = _new_cluster(state, clusters, target_lsp, cfg, rng)
        others = sum(c.intrinsic_power for c in live)
        born = _with_direct_ray(born, tx, state.rx, _k_factor_power(others, ss))
        removed = weakest_cluster(clusters) if len(live) >= wanted else None
        if removed is not None:
            clusters = _retire(clusters, removed.id)
        clusters = clusters + [born]
        update.update(aoa_lobes=aoa_lobes, aod_lobes=aod_lobes, next_cluster_id=born.id + 1)
        event = ClusterEvent(
            kind="los_birth",
            tick=state.tick_index,
            time=t,
            added_id=born.id,
            removed_id=removed.id if removed else None,
        )
    else:
        direct = next((c for c in live if c.is_los), None)
        removed_id = None
        if direct is not None:
            clusters = _retire(clusters, direct.id)
            removed_id = direct.id
        remaining = len(live) - (1 if direct is not None else 0)
        added_id = None
        if remaining < 1 or remaining < wanted:
            born, aoa_lobes, aod_lobes = _new_cluster(state, clusters, target_lsp, cfg, rng)
            clusters = clusters + [born]
            added_id = born.id
            update.update(aoa_lobes=aoa_lobes, aod_lobes=aod_lobes, next_cluster_id=born.id + 1)
        event = ClusterEvent(
            kind="los_death", tick=state.tick_index, time=t, added_id=added_id, removed_id=removed_id
        )

    logger.debug(f"Tick {state.tick_index}: visibility changed to {los.value}")
    return state.model_copy(update={**update, "clusters": clusters, "last_event": event})


def evolve_small_scale(
    state: ChannelState,
    tick: UpdateTick,
    prev_tick: UpdateTick,
    tx: Position,
    cfg: ScenarioConfig,
    drift: Optional[AngleDrift] = None,
) -> ChannelState:
    """
    Move every subpath with the receiver between two consecutive ticks.

    Each scattered path shortens by the displacement projected on its arrival
    direction, which sets the delay and phase change; arrival angles follow the
    drift strategy and departure angles stay fixed. Paths on the direct path
    (the LOS ray, or an NLOS subpath at the direct-path delay) are recomputed
    from geometry, and no path gets shorter than the direct one.
    """
    if tick.index != prev_tick.index + 1:
        raise InvalidInputError(
            f"ticks {prev_tick.index} and {tick.index} are not consecutive"
        )
    drift = drift or ScattererDrift()
    rx_prev, rx_new = prev_tick.position, tick.position
    step = rx_new.as_array() - rx_prev.as_array()
    wavenumber = 2.0 * math.pi * cfg.carrier_frequency / speed_of_light
    direct_prev = tr_separation(tx, rx_prev)
    direct_new = tr_separation(tx, rx_new)
    direct_angles = direction_angles(rx_new, tx)
    departure_angles = direction_angles(tx, rx_new)

    clusters = []
    for c in state.clusters:
        direct = _on_direct_path(c, direct_prev)
        shortening = unit_vectors(c.aoa_az, c.aoa_el) @ step
        aoa_az, aoa_el = drift.update(c.aoa_az, c.aoa_el, c.delays, rx_prev, rx_new, tx)
        delays = np.maximum(c.delays - shortening / speed_of_light, direct_new / speed_of_light)
        aod_az, aod_el = c.aod_az, c.aod_el
        if direct.any():
            shortening[direct] = direct_prev - direct_new
            delays[direct] = direct_new / speed_of_light
            aoa_az[direct], aoa_el[direct] = direct_angles
            aod_az, aod_el = aod_az.copy(), aod_el.copy()
            aod_az[direct], aod_el[direct] = departure_angles
        phases = np.mod(c.phases + wavenumber * shortening, 2.0 * math.pi)
        clusters.append(
            c.model_copy(
                update={
                    "delays": delays,
                    "base_delay": float(delays.min()),
                    "aoa_az": aoa_az,
                    "aoa_el": aoa_el,
                    "aod_az": aod_az,
                    "aod_el": aod_el,
                    "phases": phases,
                }
            )
        )

    return state.model_copy(
        update={
            "clusters": clusters,
            "rx": rx_new,
            "reference_delay": direct_new / speed_of_light,
            "tick_index": tick.index,
        }
    )


def synthesize_cir(state: ChannelState, path_loss: float, tick: UpdateTick) -> Cir:
    """Normalise ramp-weighted subpath powers to the path-loss gain."""
    weights = np.concatenate([c.ramp * c.powers for c in state.clusters])
    total = weights.sum()
    if not total > 0:
        raise SimulationError(f"tick {tick.index}: channel carries no power")

    phases = np.concatenate([c.phases for c in state.clusters])
    gain = 10.0 ** (-path_loss / 20.0)
    return Cir(
        timestamp=tick.time,
        tick_index=tick.index,
        rx=tick.position,
        path_loss_db=path_loss,
        amplitudes=np.sqrt(weights / total) * gain * np.exp(1j * phases),
        delays=np.concatenate([c.delays for c in state.clusters]),
        aoa_az=np.concatenate([c.aoa_az for c in state.clusters]),
        aoa_el=np.concatenate([c.aoa_el for c in state.clusters]),
        aod_az=np.concatenate([c.aod_az for c in state.clusters]),
        aod_el=np.concatenate([c.aod_el for c in state.clusters]),
        cluster_ids=np.concatenate([np.full(len(c.delays), c.id) for c in state.clusters]),
    )


def step(
    state: ChannelState,
    tick: UpdateTick,
    prev_tick: Optional[UpdateTick],
    route: RouteContext,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
) -> Tuple[ChannelState, Cir]:
    """
    One update tick: visibility from the route sequence, target LSPs on a cell
    change or flip, the birth/death trial (or forced flip event), small-scale
    evolution and CIR synthesis. prev_tick is None for the first tick of a
    drive, which only re-synthesises the initial channel.
    """
    los = route.los_states[tick.index]
    cell = grid_of(tick.position, cfg.correlation_distance_cluster_count, cfg.grid_origin)
    flipped = los != state.los
    state = state.model_copy(update={"tick_index": tick.index})

    target = state.target_lsp
    if flipped or cell != state.current_cell or target is None:
        target = route.lsp_source(cell, los)
        state = state.model_copy(update={"current_cell": cell, "target_lsp": target})
        logger.debug(
            f"Tick {tick.index}: cell ({cell.i}, {cell.j}) targets {target.n_time_clusters} clusters"
        )

    if prev_tick is not None:
        if flipped:
            state = apply_los_transition(state, los, route.tx, target, tick.time, cfg, rng)
        else:
            state = apply_birth_death(state, target, tick.time, cfg, rng)
        state = evolve_small_scale(state, tick, prev_tick, route.tx, cfg, route.drift)

    d = tr_separation(route.tx, tick.position)
    sf = route.shadow_fading_db[los][tick.index]
    sf_los = route.shadow_fading_db[LosState.LOS][tick.index]
    pl = path_loss_db(cfg.carrier_frequency, d, los, sf, cfg, sf_los=sf_los)
    return state, synthesize_cir(state, pl, tick)
