import logging
import os
from typing import Any, Dict, List, Optional

import numpy as np
import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError

from .errors import ConfigError
from .fields.bank import MAX_CLUSTER_FIELDS
from .types import ConfigValidation, LosState, Position, Trajectory

load_dotenv()

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "SPATIAL_SIM_OUTPUT_DIR"
CONFIG_ENV = "SPATIAL_SIM_CONFIG"
DEFAULT_CONFIG_NAME = "umi_street_canyon.yml"

# 73 GHz drive campaign hardware: carrier, PN chip rate
DEFAULT_CARRIER_FREQUENCY = 73.5e9
DEFAULT_CHIP_RATE = 500e6
MIN_CARRIER_FREQUENCY = 0.8e9
MAX_CARRIER_FREQUENCY = 100e9


class CountDistribution(BaseModel):
    """Discrete distribution over low..high; uniform unless pmf weights are given."""

    low: int
    high: int
    pmf: Optional[List[float]] = None

    def weights(self) -> np.ndarray:
        if self.pmf is None:
            return np.full(self.high - self.low + 1, 1.0)
        return np.asarray(self.pmf, dtype=float)

    def inverse_cdf(self, u: float) -> int:
        w = self.weights()
        cdf = np.cumsum(w) / w.sum()
        k = int(np.searchsorted(cdf, u, side="right"))
        return self.low + min(k, len(w) - 1)

    def problems(self, name: str) -> List[str]:
        errors = []
        if self.low < 1:
            errors.append(f"{name}.low must be at least 1, got {self.low}")
        if self.high < self.low:
            errors.append(f"{name}.high ({self.high}) is below low ({self.low})")
        elif self.pmf is not None:
            if len(self.pmf) != self.high - self.low + 1:
                errors.append(
                    f"{name}.pmf has {len(self.pmf)} weights for {self.high - self.low + 1} values"
                )
            if any(p < 0 for p in self.pmf) or sum(self.pmf) <= 0:
                errors.append(f"{name}.pmf weights must be non-negative with a positive sum")
        return errors


class DelaySpreadDistribution(BaseModel):
    """Lognormal rms delay spread: median * 10**(sigma_lg * g)."""

    median: float  # seconds
    sigma_lg: float = 0.2

    def from_gaussian(self, g: float) -> float:
        return self.median * 10.0 ** (self.sigma_lg * g)


class SmallScaleConfig(BaseModel):
    ramp_ticks: int = 3
    subpath_angle_std: float = 10.0  # degrees around the lobe centre
    elevation_spread: float = 5.0  # degrees
    intra_cluster_delay_mean: float = 1e-9  # seconds
    cluster_decay_ratio: float = 1.0  # delay-power constant over the delay scale
    cluster_shadowing_db: float = 3.0
    los_k_factor_db: float = 6.0
    min_cluster_gap: float = 0.0  # seconds; > 0 keeps clusters resolvable
    angle_drift: str = "scatterer"


class ScenarioConfig(BaseModel):
    carrier_frequency: float = DEFAULT_CARRIER_FREQUENCY
    scenario: str = "UMi-street-canyon"
    correlation_distance_los: float = 12.0
    correlation_distance_nlos: float = 15.0
    correlation_distance_cluster_count: float = 7.5
    ple_los: float = 2.0
    ple_nlos: float = 3.2
    sf_sigma_los: float = 4.0
    sf_sigma_nlos: float = 8.0
    los_prob_d1: float = 22.0
    los_prob_d2: float = 100.0
    lambda_c: float = 0.2  # cluster birth/death events per second
    force_los_state: Optional[LosState] = None
    max_time_clusters: int = 6
    time_clusters_los: CountDistribution = CountDistribution(low=1, high=3)
    time_clusters_nlos: CountDistribution = CountDistribution(low=1, high=6)
    spatial_lobes: CountDistribution = CountDistribution(low=1, high=5)
    subpaths_per_cluster: CountDistribution = CountDistribution(low=1, high=10)
    delay_spread_los: DelaySpreadDistribution = DelaySpreadDistribution(median=20e-9)
    delay_spread_nlos: DelaySpreadDistribution = DelaySpreadDistribution(median=50e-9)
    grid_origin: Position = Position(x=0.0, y=0.0, z=0.0)
    small_scale: SmallScaleConfig = Field(default_factory=SmallScaleConfig)

    def correlation_distance(self, los: LosState) -> float:
        return self.correlation_distance_los if los == LosState.LOS else self.correlation_distance_nlos

    def ple(self, los: LosState) -> float:
        return self.ple_los if los == LosState.LOS else self.ple_nlos

    def sf_sigma(self, los: LosState) -> float:
        return self.sf_sigma_los if los == LosState.LOS else self.sf_sigma_nlos

    def time_clusters(self, los: LosState) -> CountDistribution:
        return self.time_clusters_los if los == LosState.LOS else self.time_clusters_nlos

    def delay_spread(self, los: LosState) -> DelaySpreadDistribution:
        return self.delay_spread_los if los == LosState.LOS else self.delay_spread_nlos


class AnalysisConfig(BaseModel):
    bin_width: float = 1.0 / DEFAULT_CHIP_RATE
    threshold_db: float = 20.0
    min_void: float = 25e-9
    beamwidth_deg: float = 15.0
    align_output: bool = False
    average_repeated_sweeps: bool = True


class EmitFlags(BaseModel):
    drive_log: bool = True
    pdps: bool = False
    analysis_report: bool = False


def default_output_dir() -> str:
    return os.getenv(OUTPUT_DIR_ENV, "output")


class RunConfig(BaseModel):
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    trajectory: Trajectory
    tx: Position
    update_distance: float = 1.0
    seed: int = 0
    replicates: int = 1
    workers: int = 4
    replicate_seed_mode: str = "spawn"
    output_dir: str = Field(default_factory=default_output_dir)
    emit: EmitFlags = Field(default_factory=EmitFlags)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)


def default_config_path() -> str:
    path = os.getenv(CONFIG_ENV)
    if path:
        return path
    path = os.path.join(os.path.dirname(__file__), "..", "config", DEFAULT_CONFIG_NAME)
    if not os.path.exists(path):
        path = os.path.join("config", DEFAULT_CONFIG_NAME)
    return path


def set_by_path(raw: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    node = raw
    for key in keys[:-1]:
        child = node.get(key)
        if not isinstance(child, dict):
            child = {}
            node[key] = child
        node = child
    node[keys[-1]] = value


def parse_overrides(items: List[str]) -> Dict[str, Any]:
    """Turn ["a.b=1", ...] into {"a.b": 1}; values are parsed as YAML scalars."""
    parsed = {}
    for item in items:
        if "=" not in item:
            raise ConfigError([f"override '{item}' is not of the form path=value"])
        key, value = item.split("=", 1)
        parsed[key.strip()] = yaml.safe_load(value)
    return parsed


def build_config(raw: Dict[str, Any], source: Optional[str] = None) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        errors = [
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        ]
        raise ConfigError(errors, source=source) from e


def load_config(
    path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None
) -> RunConfig:
    """Read a YAML run config, apply dotted-path overrides and build the model."""
    path = path or default_config_path()
    try:
        with open(path, "r") as f:
            raw = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError([f"cannot read config: {e}"], source=path) from e
    except yaml.YAMLError as e:
        raise ConfigError([f"invalid YAML: {e}"], source=path) from e

    if not isinstance(raw, dict):
        raise ConfigError(["top level of the config must be a mapping"], source=path)

    for key, value in (overrides or {}).items():
        set_by_path(raw, key, value)

    cfg = build_config(raw, source=path)
    logger.info(f"Loaded run config from {path}")
    return cfg


def config_echo(cfg: RunConfig) -> Dict[str, Any]:
    """Fully resolved config (defaults included) for artifact headers."""
    return cfg.model_dump(mode="json")


def validate_config(cfg: RunConfig) -> ConfigValidation:
    """Check every range and ordering constraint; all violations are collected."""
    errors: List[str] = []
    sc = cfg.scenario
    ss = sc.small_scale

    if not MIN_CARRIER_FREQUENCY <= sc.carrier_frequency <= MAX_CARRIER_FREQUENCY:
        errors.append(
            f"carrier_frequency {sc.carrier_frequency / 1e9:g} GHz is outside the supported 0.8-100 GHz range"
        )
    for name in (
        "correlation_distance_los",
        "correlation_distance_nlos",
        "correlation_distance_cluster_count",
        "ple_los",
        "ple_nlos",
        "sf_sigma_los",
        "sf_sigma_nlos",
        "los_prob_d1",
        "los_prob_d2",
    ):
        value = getattr(sc, name)
        if not value > 0:
            errors.append(f"scenario.{name} must be positive, got {value}")
    if sc.lambda_c < 0:
        errors.append(f"scenario.lambda_c must be non-negative, got {sc.lambda_c}")
    if not 1 <= sc.max_time_clusters <= MAX_CLUSTER_FIELDS:
        errors.append(
            f"scenario.max_time_clusters must be between 1 and {MAX_CLUSTER_FIELDS}, got {sc.max_time_clusters}"
        )

    for name in ("time_clusters_los", "time_clusters_nlos", "spatial_lobes", "subpaths_per_cluster"):
        errors.extend(getattr(sc, name).problems(f"scenario.{name}"))
    for name in ("time_clusters_los", "time_clusters_nlos"):
        dist = getattr(sc, name)
        if dist.high > sc.max_time_clusters:
            errors.append(
                f"scenario.{name}.high ({dist.high}) exceeds max_time_clusters ({sc.max_time_clusters})"
            )
    for name in ("delay_spread_los", "delay_spread_nlos"):
        dist = getattr(sc, name)
        if not dist.median > 0 or dist.sigma_lg < 0:
            errors.append(f"scenario.{name} needs a positive median and non-negative sigma_lg")

    if ss.ramp_ticks < 1:
        errors.append(f"small_scale.ramp_ticks must be at least 1, got {ss.ramp_ticks}")
    if ss.subpath_angle_std < 0 or ss.elevation_spread < 0:
        errors.append("small_scale angle spreads must be non-negative")
    if not ss.intra_cluster_delay_mean > 0:
        errors.append("small_scale.intra_cluster_delay_mean must be positive")
    if not ss.cluster_decay_ratio > 0:
        errors.append("small_scale.cluster_decay_ratio must be positive")
    if ss.cluster_shadowing_db < 0 or ss.min_cluster_gap < 0:
        errors.append("small_scale.cluster_shadowing_db and min_cluster_gap must be non-negative")
    if ss.angle_drift not in ("scatterer", "linear"):
        errors.append(f"small_scale.angle_drift must be 'scatterer' or 'linear', got '{ss.angle_drift}'")

    min_corr = min(
        sc.correlation_distance_los,
        sc.correlation_distance_nlos,
        sc.correlation_distance_cluster_count,
    )
    if not cfg.update_distance > 0:
        errors.append(f"update_distance must be positive, got {cfg.update_distance}")
    elif cfg.update_distance > min_corr:
        errors.append(
            f"update_distance {cfg.update_distance} m exceeds the smallest correlation distance "
            f"{min_corr} m; the update distance must stay well below the correlation distance"
        )

    if cfg.replicates < 1:
        errors.append(f"replicates must be at least 1, got {cfg.replicates}")
    if cfg.workers < 1:
        errors.append(f"workers must be at least 1, got {cfg.workers}")
    if cfg.replicate_seed_mode not in ("spawn", "fixed"):
        errors.append(f"replicate_seed_mode must be 'spawn' or 'fixed', got '{cfg.replicate_seed_mode}'")

    an = cfg.analysis
    if not an.bin_width > 0:
        errors.append(f"analysis.bin_width must be positive, got {an.bin_width}")
    if not an.threshold_db > 0:
        errors.append(f"analysis.threshold_db must be positive, got {an.threshold_db}")
    if an.min_void < 0:
        errors.append(f"analysis.min_void must be non-negative, got {an.min_void}")
    if not 0 < an.beamwidth_deg <= 360:
        errors.append(f"analysis.beamwidth_deg must lie in (0, 360], got {an.beamwidth_deg}")

    return ConfigValidation(valid=not errors, errors=errors)
