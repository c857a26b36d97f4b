import math
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Position(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    z: float = 0.0  # antenna height, meters

    @model_validator(mode="after")
    def _check_finite(self) -> "Position":
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError("position coordinates must be finite")
        if self.z < 0:
            raise ValueError(f"antenna height must be non-negative, got {self.z}")
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "Position":
        return cls(x=float(values[0]), y=float(values[1]), z=float(values[2]))


class Trajectory(BaseModel):
    waypoints: List[Position]
    speed: float  # m/s

    @model_validator(mode="after")
    def _check_route(self) -> "Trajectory":
        errors = []
        if len(self.waypoints) < 2:
            errors.append(f"trajectory needs at least 2 waypoints, got {len(self.waypoints)}")
        for k in range(1, len(self.waypoints)):
            if self.waypoints[k] == self.waypoints[k - 1]:
                errors.append(f"waypoints {k - 1} and {k} coincide")
        if not self.speed > 0:
            errors.append(f"speed must be positive, got {self.speed}")
        if errors:
            raise ValueError("; ".join(errors))
        return self

    @property
    def length(self) -> float:
        pts = np.array([p.as_array() for p in self.waypoints])
        return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


class UpdateTick(BaseModel):
    index: int
    time: float  # seconds since route start
    position: Position
    heading: Tuple[float, float]  # unit vector in the x-y plane
    arc_length: float = 0.0


class GridIndex(BaseModel):
    model_config = ConfigDict(frozen=True)

    i: int
    j: int


class LosState(str, Enum):
    LOS = "LOS"
    NLOS = "NLOS"


class CorrelatedFieldSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    correlation_distance: float
    global_seed: int
    field_id: int

    @model_validator(mode="after")
    def _check_distance(self) -> "CorrelatedFieldSpec":
        if not self.correlation_distance > 0:
            raise ValueError(
                f"correlation distance must be positive, got {self.correlation_distance}"
            )
        return self


class FieldSample(BaseModel):
    gaussian: float
    uniform: float


class LargeScaleParams(BaseModel):
    cell: GridIndex
    los: LosState
    n_time_clusters: int
    n_spatial_lobes: int
    n_subpaths_per_cluster: List[int]
    rms_delay_spread: float  # seconds
    shadow_fading: float  # dB

    @model_validator(mode="after")
    def _check_counts(self) -> "LargeScaleParams":
        if self.n_time_clusters < 1 or self.n_spatial_lobes < 1:
            raise ValueError("cluster and lobe counts must be at least 1")
        if len(self.n_subpaths_per_cluster) != self.n_time_clusters:
            raise ValueError(
                f"expected {self.n_time_clusters} subpath counts, got {len(self.n_subpaths_per_cluster)}"
            )
        if any(n < 1 for n in self.n_subpaths_per_cluster):
            raise ValueError("every cluster needs at least one subpath")
        return self


class Subpath(BaseModel):
    delay: float  # absolute propagation delay, seconds
    power: float  # linear, relative
    aoa_az: float  # degrees
    aoa_el: float
    aod_az: float
    aod_el: float
    phase: float  # radians in [0, 2*pi)


class TimeCluster(BaseModel):
    """
    A group of subpaths from one scatterer. Subpath parameters are held as
    parallel arrays so that evolution is vectorised per cluster.

    ramp_direction is +1 while the cluster fades in, -1 while it fades out and
    0 once stable.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    id: int
    base_delay: float
    birth_tick: int
    ramp: float = 1.0
    ramp_direction: int = 0
    is_los: bool = False
    lobe: int = 0
    delays: np.ndarray
    powers: np.ndarray
    aoa_az: np.ndarray
    aoa_el: np.ndarray
    aod_az: np.ndarray
    aod_el: np.ndarray
    phases: np.ndarray

    @property
    def intrinsic_power(self) -> float:
        return float(self.powers.sum())

    @property
    def power(self) -> float:
        return self.ramp * self.intrinsic_power

    @property
    def dying(self) -> bool:
        return self.ramp_direction < 0

    @property
    def subpaths(self) -> List[Subpath]:
        return [
            Subpath(
                delay=float(self.delays[k]),
                power=float(self.powers[k]),
                aoa_az=float(self.aoa_az[k]),
                aoa_el=float(self.aoa_el[k]),
                aod_az=float(self.aod_az[k]),
                aod_el=float(self.aod_el[k]),
                phase=float(self.phases[k]),
            )
            for k in range(len(self.delays))
        ]


class ClusterEvent(BaseModel):
    kind: Literal["birth", "death", "replacement", "los_birth", "los_death"]
    tick: int
    time: float
    added_id: Optional[int] = None
    removed_id: Optional[int] = None


class ChannelState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    clusters: List[TimeCluster]
    los: LosState
    last_update_time: float  # t0 of the birth/death law
    current_cell: GridIndex
    rx: Position
    reference_delay: float  # direct-path delay at rx
    delay_scale: float  # seconds per normalised excess-delay unit
    power_decay: float  # seconds, exponential delay-power constant
    aoa_lobes: List[float] = Field(default_factory=list)
    aod_lobes: List[float] = Field(default_factory=list)
    target_lsp: Optional[LargeScaleParams] = None
    tick_index: int = 0
    next_cluster_id: int = 0
    last_event: Optional[ClusterEvent] = None

    @property
    def live_clusters(self) -> List[TimeCluster]:
        return [c for c in self.clusters if not c.dying]

    @property
    def cluster_count(self) -> int:
        return len(self.live_clusters)

    @property
    def in_transition(self) -> bool:
        return any(c.ramp_direction != 0 for c in self.clusters)


class Cir(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    timestamp: float
    tick_index: int
    rx: Position
    path_loss_db: float
    amplitudes: np.ndarray  # complex, linear volts
    delays: np.ndarray
    aoa_az: np.ndarray
    aoa_el: np.ndarray
    aod_az: np.ndarray
    aod_el: np.ndarray
    cluster_ids: np.ndarray

    @property
    def tap_powers(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def total_power(self) -> float:
        return float(self.tap_powers.sum())


class Pdp(BaseModel):
    bin_width: float  # seconds
    first_bin_delay: float  # seconds
    powers: List[float]  # linear
    noise_floor: float = 0.0

    @model_validator(mode="after")
    def _check_bins(self) -> "Pdp":
        if not self.bin_width > 0:
            raise ValueError(f"bin width must be positive, got {self.bin_width}")
        if any(p < 0 for p in self.powers):
            raise ValueError("PDP powers must be non-negative")
        return self

    def as_array(self) -> np.ndarray:
        return np.asarray(self.powers, dtype=float)

    @property
    def delays(self) -> np.ndarray:
        return self.first_bin_delay + self.bin_width * np.arange(len(self.powers))


class DirectionalPdp(BaseModel):
    azimuth: float  # pointing angle, degrees
    pdp: Pdp

    @model_validator(mode="after")
    def _check_azimuth(self) -> "DirectionalPdp":
        if not 0.0 <= self.azimuth < 360.0:
            raise ValueError(f"azimuth must lie in [0, 360), got {self.azimuth}")
        return self


class RouteSeries(BaseModel):
    spacing: float  # meters
    values: List[float]

    @model_validator(mode="after")
    def _check_series(self) -> "RouteSeries":
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if len(self.values) < 2:
            raise ValueError("a route series needs at least 2 values")
        return self


# Output records


class ClusterSummary(BaseModel):
    id: int
    delay: float  # seconds, strongest subpath
    power: float  # linear, ramp applied
    ramp: float


class TickRecord(BaseModel):
    index: int
    time: float
    position: Position
    cell: GridIndex
    los: LosState
    tr_separation: float
    path_loss_db: float
    shadow_fading_db: float
    cluster_count: int
    clusters: List[ClusterSummary]
    rms_delay_spread: float
    in_transition: bool = False
    event: Optional[ClusterEvent] = None


class DriveLog(BaseModel):
    config: Dict[str, Any]
    records: List[TickRecord]
    analysis: Optional["AnalysisReport"] = None
    artifacts: List[str] = Field(default_factory=list)


class LocationAnalysis(BaseModel):
    location: str
    n_sweeps: int
    cluster_count: int
    rms_delay_spread: Optional[float] = None  # seconds; None for an empty PDP
    total_power_dbm: Optional[float] = None


class AnalysisReport(BaseModel):
    spacing: float
    threshold_db: float
    min_void: float
    bin_width: Optional[float] = None
    locations: List[LocationAnalysis]
    cluster_count_correlation_distance: Optional[float] = None
    delay_spread_correlation_distance: Optional[float] = None


class TickStatistics(BaseModel):
    index: int
    path_loss_mean: float
    path_loss_std: float
    cluster_count_mean: float
    cluster_count_std: float
    rms_delay_spread_mean: float
    rms_delay_spread_std: float


class MonteCarloSummary(BaseModel):
    replicates: int
    seeds: List[int]
    ticks: List[TickStatistics]
    event_rate: float
    expected_event_rate: float
    tick_events: int
    los_fraction_by_distance: Dict[str, float]
    median_cluster_run_length: float


class ConfigValidation(BaseModel):
    valid: bool
    errors: List[str] = Field(default_factory=list)

    @property
    def error(self) -> Optional[str]:
        return "; ".join(self.errors) if self.errors else None


DriveLog.model_rebuild()
