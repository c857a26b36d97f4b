from ..errors import InvalidInputError
from .base import MIN_SCATTERER_RANGE, AngleDrift, scatterer_range, unit_vectors
from .linear import LinearDrift
from .scatterer import ScattererDrift

_DRIFTS = {
    ScattererDrift.name: ScattererDrift,
    LinearDrift.name: LinearDrift,
}


def get_drift(name: str) -> AngleDrift:
    drift = _DRIFTS.get(name)
    if drift is None:
        raise InvalidInputError(f"Unknown angle drift: {name}")
    return drift()


__all__ = [
    "MIN_SCATTERER_RANGE",
    "AngleDrift",
    "ScattererDrift",
    "LinearDrift",
    "get_drift",
    "scatterer_range",
    "unit_vectors",
]
