import logging
import math
from typing import List, Sequence

import numpy as np
from scipy.signal import correlate

from ..errors import InvalidInputError
from ..types import RouteSeries

logger = logging.getLogger(__name__)

MIN_SERIES_LENGTH = 10
_DECORRELATION_LEVEL = math.exp(-1.0)


def autocorrelation(values: Sequence[float]) -> np.ndarray:
    """Mean-removed autocorrelation normalised to 1 at lag 0 (biased estimator)."""
    v = np.asarray(values, dtype=float)
    v = v - v.mean()
    energy = float(v @ v)
    if energy <= 0:
        return np.ones(len(v))
    full = correlate(v, v, mode="full", method="fft")
    return full[len(v) - 1 :] / energy


def estimate_correlation_distance(series: RouteSeries) -> float:
    """
    Smallest lag distance at which the autocorrelation drops below 1/e.

    The crossing is linearly interpolated between lags. A series already
    below 1/e at the first lag is resolved to one spacing. A constant series
    has no decorrelation and returns inf, as does a series that never crosses
    within half its length.
    """
    n = len(series.values)
    if n < MIN_SERIES_LENGTH:
        raise InvalidInputError(
            f"need at least {MIN_SERIES_LENGTH} values to estimate a correlation distance, got {n}"
        )
    v = np.asarray(series.values, dtype=float)
    if np.allclose(v, v[0]):
        return math.inf

    acf = autocorrelation(v)
    below = np.flatnonzero(acf[1 : n // 2 + 1] < _DECORRELATION_LEVEL)
    if below.size == 0:
        logger.warning(
            f"Autocorrelation stays above 1/e over {n // 2} lags; correlation distance unresolved"
        )
        return math.inf

    k = int(below[0]) + 1
    if k == 1:
        return series.spacing
    lag = (k - 1) + (acf[k - 1] - _DECORRELATION_LEVEL) / (acf[k - 1] - acf[k])
    return float(lag * series.spacing)


def run_lengths(values: Sequence) -> List[int]:
    """Length of the constant run each sample belongs to."""
    lengths: List[int] = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] != values[start]:
            lengths.extend([k - start] * (k - start))
            start = k
    return lengths


def median_run_length(values: Sequence) -> float:
    """Sample-weighted median of constant-run lengths."""
    if len(values) == 0:
        raise InvalidInputError("no values to measure runs of")
    return float(np.median(run_lengths(values)))
