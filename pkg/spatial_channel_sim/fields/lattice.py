import functools
import math
from typing import Optional, Tuple

import numpy as np
from scipy.special import ndtr

from ..geometry import grid_of
from ..types import CorrelatedFieldSpec, FieldSample, GridIndex, Position

# Spawn-key tags: each use of a seed draws from its own stream family
STREAM_LATTICE = 1
STREAM_PATH = 2
STREAM_CHANNEL = 3

_UNIFORM_CEILING = float(np.nextafter(1.0, 0.0))


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    """Counter-style stream: the seed is the entropy, the key picks the stream."""
    return np.random.SeedSequence(entropy=seed % 2**64, spawn_key=tuple(k % 2**32 for k in key))


@functools.lru_cache(maxsize=65536)
def _vertex_value(seed: int, field_id: int, i: int, j: int) -> float:
    rng = np.random.default_rng(seed_sequence(seed, STREAM_LATTICE, field_id, i, j))
    return float(rng.standard_normal())


def vertex_gaussians(cell: GridIndex, spec: CorrelatedFieldSpec) -> Tuple[float, float, float, float]:
    """
    Standard-normal values at the four corners of a cell, ordered
    (i, j), (i+1, j), (i, j+1), (i+1, j+1).

    Values are a pure function of (seed, field_id, vertex), so neighbouring
    cells see the same numbers on their shared edge.
    """
    s, f = spec.global_seed, spec.field_id
    return (
        _vertex_value(s, f, cell.i, cell.j),
        _vertex_value(s, f, cell.i + 1, cell.j),
        _vertex_value(s, f, cell.i, cell.j + 1),
        _vertex_value(s, f, cell.i + 1, cell.j + 1),
    )


def to_uniform(gaussian: float) -> float:
    return min(float(ndtr(gaussian)), _UNIFORM_CEILING)


def sample(
    position: Position, spec: CorrelatedFieldSpec, origin: Optional[Position] = None
) -> FieldSample:
    """
    Bilinear interpolation of the enclosing cell's vertex values, divided by the
    root of the summed squared weights so the marginal stays N(0, 1).
    """
    d = spec.correlation_distance
    cell = grid_of(position, d, origin)
    ox, oy = (origin.x, origin.y) if origin is not None else (0.0, 0.0)
    fx = (position.x - ox) / d - cell.i
    fy = (position.y - oy) / d - cell.j
    weights = (
        (1.0 - fx) * (1.0 - fy),
        fx * (1.0 - fy),
        (1.0 - fx) * fy,
        fx * fy,
    )
    values = vertex_gaussians(cell, spec)
    norm = math.sqrt(sum(w * w for w in weights))
    g = sum(w * v for w, v in zip(weights, values)) / norm
    return FieldSample(gaussian=g, uniform=to_uniform(g))


def cell_sample(cell: GridIndex, spec: CorrelatedFieldSpec) -> FieldSample:
    """The field at the cell's anchor (lowest) vertex; constant over the cell."""
    g = _vertex_value(spec.global_seed, spec.field_id, cell.i, cell.j)
    return FieldSample(gaussian=g, uniform=to_uniform(g))
