from enum import IntEnum

from ..types import CorrelatedFieldSpec, LosState


class FieldId(IntEnum):
    LOS_DRAW = 1
    SHADOW_FADING_LOS = 2
    SHADOW_FADING_NLOS = 3
    TIME_CLUSTERS_LOS = 4
    TIME_CLUSTERS_NLOS = 5
    SPATIAL_LOBES_LOS = 6
    SPATIAL_LOBES_NLOS = 7
    DELAY_SPREAD_LOS = 8
    DELAY_SPREAD_NLOS = 9
    SHADOW_FADING_ROUTE = 10
    # cluster k uses BASE + k, k < MAX_CLUSTER_FIELDS
    SUBPATHS_LOS_BASE = 1024
    SUBPATHS_NLOS_BASE = 2048


MAX_CLUSTER_FIELDS = int(FieldId.SUBPATHS_NLOS_BASE - FieldId.SUBPATHS_LOS_BASE)


_BY_STATE = {
    "shadow_fading": (FieldId.SHADOW_FADING_LOS, FieldId.SHADOW_FADING_NLOS),
    "time_clusters": (FieldId.TIME_CLUSTERS_LOS, FieldId.TIME_CLUSTERS_NLOS),
    "spatial_lobes": (FieldId.SPATIAL_LOBES_LOS, FieldId.SPATIAL_LOBES_NLOS),
    "delay_spread": (FieldId.DELAY_SPREAD_LOS, FieldId.DELAY_SPREAD_NLOS),
    "subpaths": (FieldId.SUBPATHS_LOS_BASE, FieldId.SUBPATHS_NLOS_BASE),
}


class FieldBank:
    """
    The independent random fields of one drive, all keyed by one seed.

    LOS and NLOS variants of a parameter live on different field ids so that a
    visibility flip lands on a fresh but still spatially consistent draw.
    """

    def __init__(self, seed: int):
        self.seed = seed

    def spec(self, field_id: int, correlation_distance: float) -> CorrelatedFieldSpec:
        return CorrelatedFieldSpec(
            correlation_distance=correlation_distance,
            global_seed=self.seed,
            field_id=int(field_id),
        )

    def field_id(self, quantity: str, los: LosState, offset: int = 0) -> int:
        los_id, nlos_id = _BY_STATE[quantity]
        return int(los_id if los == LosState.LOS else nlos_id) + offset
