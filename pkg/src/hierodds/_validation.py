"""Input validation helpers used across the estimator and pipeline surfaces."""

from __future__ import annotations

import numpy as np

from .errors import DataError, ParameterError


def as_series(values, name: str = "series", min_length: int = 1) -> np.ndarray:
    """Coerce ``values`` to a 1-D float64 array and validate it.

    Raises DataError on wrong shape, non-finite entries, or a series shorter
    than ``min_length``.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise DataError(f"{name} has length {arr.size}, need at least {min_length}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise DataError(f"{name} contains a non-finite value at index {bad}")
    return arr


def check_horizon(horizon: int) -> int:
    if not isinstance(horizon, (int, np.integer)) or isinstance(horizon, bool):
        raise ParameterError(f"horizon must be an integer, got {horizon!r}")
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")
    return int(horizon)


def check_probability(value: float, name: str, *, upper_inclusive: bool = True) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0.0:
        raise ParameterError(f"{name} must be in [0, 1], got {value}")
    if upper_inclusive and value > 1.0:
        raise ParameterError(f"{name} must be in [0, 1], got {value}")
    if not upper_inclusive and value >= 1.0:
        raise ParameterError(f"{name} must be in [0, 1), got {value}")
    return value


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ParameterError(f"{name} must be > 0, got {value}")
    return value


def check_nonnegative(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0.0:
        raise ParameterError(f"{name} must be >= 0, got {value}")
    return value
