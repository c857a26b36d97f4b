import math
from typing import List, Sequence

import numpy as np

from ..errors import InvalidInputError
from ..types import CorrelatedFieldSpec, Position
from .lattice import STREAM_PATH, seed_sequence


def exp_correlation(d: float, d_corr: float) -> float:
    if d < 0:
        raise InvalidInputError(f"lag distance must be non-negative, got {d}")
    if not d_corr > 0:
        raise InvalidInputError(f"correlation distance must be positive, got {d_corr}")
    return math.exp(-d / d_corr)


def sample_ou_path(positions: Sequence[Position], spec: CorrelatedFieldSpec) -> List[float]:
    """
    Exponentially correlated Gaussian sequence along a path:

        v[0] ~ N(0, 1)
        v[k] = rho_k * v[k-1] + sqrt(1 - rho_k**2) * w[k],   rho_k = exp(-dd_k / d_corr)

    dd_k is the planar distance between successive positions. The innovations
    w come from the field's own deterministic stream.
    """
    if len(positions) == 0:
        raise InvalidInputError("cannot sample a field along an empty path")

    xy = np.array([(p.x, p.y) for p in positions], dtype=float)
    steps = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    rho = np.exp(-steps / spec.correlation_distance)
    gain = np.sqrt(np.clip(1.0 - rho**2, 0.0, None))

    rng = np.random.default_rng(seed_sequence(spec.global_seed, STREAM_PATH, spec.field_id))
    w = rng.standard_normal(len(positions))

    v = np.empty(len(positions))
    v[0] = w[0]
    for k in range(1, len(positions)):
        v[k] = rho[k - 1] * v[k - 1] + gain[k - 1] * w[k]
    return v.tolist()
