import logging
import math
from typing import Dict, List, Optional, Sequence

from scipy.constants import speed_of_light

from .config import ScenarioConfig
from .errors import InvalidInputError
from .fields import FieldBank, FieldId, cell_sample, sample_ou_path, to_uniform
from .geometry import grid_of, tr_separation
from .types import GridIndex, LargeScaleParams, LosState, Position, UpdateTick

logger = logging.getLogger(__name__)

# close-in model, free-space reference distance (m)
REFERENCE_DISTANCE = 1.0


def los_probability(d: float, cfg: ScenarioConfig) -> float:
    """Squared d1/d2 LOS probability model; non-increasing in d."""
    if not d > 0:
        raise InvalidInputError(f"distance must be positive, got {d}")
    e = math.exp(-d / cfg.los_prob_d2)
    return (min(cfg.los_prob_d1 / d, 1.0) * (1.0 - e) + e) ** 2


def los_state_along(
    ticks: Sequence[UpdateTick], tx: Position, cfg: ScenarioConfig, fields: FieldBank
) -> List[LosState]:
    """
    Spatially correlated LOS/NLOS sequence: one exponentially filtered uniform
    draw per tick, compared against the LOS probability at the tick's T-R
    separation.
    """
    if not ticks:
        raise InvalidInputError("no ticks to draw LOS states for")
    if cfg.force_los_state is not None:
        return [cfg.force_los_state] * len(ticks)

    spec = fields.spec(FieldId.LOS_DRAW, cfg.correlation_distance_los)
    draws = sample_ou_path([t.position for t in ticks], spec)
    states = []
    for tick, g in zip(ticks, draws):
        p = los_probability(tr_separation(tx, tick.position), cfg)
        states.append(LosState.LOS if to_uniform(g) < p else LosState.NLOS)
    return states


def shadow_fading_along(
    ticks: Sequence[UpdateTick], cfg: ScenarioConfig, fields: FieldBank
) -> Dict[LosState, List[float]]:
    """
    Along-route shadow fading (dB) for both visibility states: one correlated
    Gaussian path scaled by each state's sigma, so a visibility flip changes the
    shadowing level but not its sign.
    """
    d = min(cfg.correlation_distance_los, cfg.correlation_distance_nlos)
    g = sample_ou_path([t.position for t in ticks], fields.spec(FieldId.SHADOW_FADING_ROUTE, d))
    return {los: [cfg.sf_sigma(los) * v for v in g] for los in (LosState.LOS, LosState.NLOS)}


def lsp_for_grid(
    cell: GridIndex, los: LosState, cfg: ScenarioConfig, fields: FieldBank
) -> LargeScaleParams:
    """
    Large-scale parameters of one grid cell. Each count is the cell's uniform
    field sample pushed through the inverse CDF of its configured distribution;
    the result depends only on (seed, cell, los).
    """
    d = cfg.correlation_distance_cluster_count

    def draw(quantity: str, offset: int = 0):
        return cell_sample(cell, fields.spec(fields.field_id(quantity, los, offset), d))

    n_clusters = min(
        cfg.time_clusters(los).inverse_cdf(draw("time_clusters").uniform),
        cfg.max_time_clusters,
    )
    n_lobes = cfg.spatial_lobes.inverse_cdf(draw("spatial_lobes").uniform)
    subpaths = [
        cfg.subpaths_per_cluster.inverse_cdf(draw("subpaths", k).uniform)
        for k in range(n_clusters)
    ]
    return LargeScaleParams(
        cell=cell,
        los=los,
        n_time_clusters=n_clusters,
        n_spatial_lobes=n_lobes,
        n_subpaths_per_cluster=subpaths,
        rms_delay_spread=cfg.delay_spread(los).from_gaussian(draw("delay_spread").gaussian),
        shadow_fading=cfg.sf_sigma(los) * draw("shadow_fading").gaussian,
    )


def lsp_at(
    position: Position, los: LosState, cfg: ScenarioConfig, fields: FieldBank
) -> LargeScaleParams:
    cell = grid_of(position, cfg.correlation_distance_cluster_count, cfg.grid_origin)
    return lsp_for_grid(cell, los, cfg, fields)


def free_space_path_loss_db(f: float, d: float = REFERENCE_DISTANCE) -> float:
    if not f > 0:
        raise InvalidInputError(f"carrier frequency must be positive, got {f}")
    return 20.0 * math.log10(4.0 * math.pi * f * d / speed_of_light)


def path_loss_db(
    f: float,
    d: float,
    los: LosState,
    sf: float,
    cfg: ScenarioConfig,
    sf_los: Optional[float] = None,
) -> float:
    """
    CI path loss: FSPL(f, 1 m) + 10 n log10(d) + shadow fading.

    Given the LOS shadow fading at the same point, an NLOS loss is floored at
    the LOS loss there, as in the 3GPP street models.
    """
    if d < REFERENCE_DISTANCE:
        raise InvalidInputError(
            f"T-R distance {d:.3f} m is below the {REFERENCE_DISTANCE} m reference distance"
        )
    pl = free_space_path_loss_db(f) + 10.0 * cfg.ple(los) * math.log10(d) + sf
    if los == LosState.NLOS and sf_los is not None:
        pl = max(pl, path_loss_db(f, d, LosState.LOS, sf_los, cfg))
    return pl
