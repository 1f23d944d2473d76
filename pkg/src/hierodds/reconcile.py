"""Odds-based top-down disaggregation of a parent total among siblings.

The odds of sibling k within a group are its value divided by the sum of the
other siblings' values. Given forecast odds for every sibling and a forecast
parent total S, each sibling satisfies

    sum(others) = S / (1 + odds_k)

which yields a linear system whose matrix has zeros on the diagonal and ones
elsewhere (J - I). That matrix is invertible for every order n >= 2 with the
closed form inv = J/(n-1) - I, so the solve is O(n):

    y_k = sum(rhs) / (n - 1) - rhs_k

The raw solution can contain negatives and, because the per-sibling odds are
forecast independently, generally sums to sum(rhs)/(n-1) rather than S.
:func:`repair_and_rescale` clips negatives to zero and rescales the positive
entries so the output is nonnegative and sums exactly to S.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_nonnegative
from .errors import ParameterError, UndefinedOddsError


@dataclass(frozen=True)
class OddsVector:
    """Per-sibling odds for one group, with the smoothing constant used."""

    values: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1 or arr.size < 2:
            raise ParameterError("odds vector needs at least two siblings")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ParameterError("odds must be finite and >= 0")
        check_nonnegative(self.c, "smoothing constant")


@dataclass(frozen=True)
class OddsSystem:
    """Right-hand side of the sibling system for one parent total."""

    n: int
    rhs: np.ndarray
    total: float


def _odds_values(odds) -> np.ndarray:
    if isinstance(odds, OddsVector):
        return odds.values
    arr = np.asarray(odds, dtype=float)
    if arr.ndim != 1:
        raise ParameterError("odds must be a one-dimensional vector")
    return arr


def compute_odds(values, k: int, c: float = 0.0) -> float:
    """Odds of sibling ``k``: (values[k] + c) / (sum of others + (n-1) * c).

    With c = 0 this is the plain likelihood ratio of the variable against the
    rest of its group; a positive c guards against all-zero siblings.
    Raises UndefinedOddsError when c = 0 and every other sibling is zero.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ParameterError("odds need a group of at least two siblings")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ParameterError("sibling values must be finite and >= 0")
    if not 0 <= k < arr.size:
        raise ParameterError(f"sibling index {k} outside group of size {arr.size}")
    c = check_nonnegative(c, "smoothing constant")
    denom = (arr.sum() - arr[k]) + (arr.size - 1) * c
    if denom == 0.0:
        raise UndefinedOddsError(
            f"odds undefined for sibling {k}: all other siblings are zero and c=0"
        )
    return float((arr[k] + c) / denom)


def odds_series(siblings: dict[str, np.ndarray], c: float = 0.0) -> dict[str, np.ndarray]:
    """Per-timestep odds for every member of one sibling group.

    ``siblings`` maps series id to an aligned value vector. Raises
    UndefinedOddsError naming the offending (id, t) when odds are undefined.
    """
    if len(siblings) < 2:
        raise ParameterError("odds need a group of at least two siblings")
    c = check_nonnegative(c, "smoothing constant")
    ids = list(siblings)
    matrix = np.stack([np.asarray(siblings[i], dtype=float) for i in ids])
    if not np.all(np.isfinite(matrix)) or np.any(matrix < 0):
        raise ParameterError("sibling values must be finite and >= 0")
    n = matrix.shape[0]
    totals = matrix.sum(axis=0)
    denom = (totals - matrix) + (n - 1) * c
    zero_rows, zero_cols = np.nonzero(denom == 0.0)
    if zero_rows.size:
        sid, t = ids[zero_rows[0]], int(zero_cols[0])
        raise UndefinedOddsError(
            f"odds undefined for series {sid!r} at t={t}: "
            "all other siblings are zero and c=0",
            series_id=sid,
            t=t,
        )
    odds = (matrix + c) / denom
    return {sid: odds[i] for i, sid in enumerate(ids)}


def build_system(odds, total: float) -> OddsSystem:
    """Build the per-sibling right-hand side b_k = total / (1 + odds_k)."""
    arr = _odds_values(odds)
    if arr.size < 2:
        raise ParameterError("system needs at least two siblings")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ParameterError("odds must be finite and >= 0")
    total = float(total)
    if not np.isfinite(total):
        raise ParameterError(f"parent total must be finite, got {total}")
    rhs = total / (1.0 + arr)
    return OddsSystem(n=int(arr.size), rhs=rhs, total=total)


def solve_system(system: OddsSystem) -> np.ndarray:
    """Solve A y = rhs for the zero-diagonal, unit-off-diagonal matrix A.

    Uses the closed-form inverse inv(A) = J/(n-1) - I, so
    y_k = sum(rhs)/(n-1) - rhs_k. The solution may contain negatives.
    """
    if system.n < 2:
        raise ParameterError("system needs at least two siblings")
    return system.rhs.sum() / (system.n - 1) - system.rhs


def repair_and_rescale(raw, total: float) -> np.ndarray:
    """Clip negatives to zero and rescale so the output sums to ``total``.

    Positive entries are scaled proportionally. If no entry is positive the
    total is split uniformly. Raises ParameterError for a negative total.
    """
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ParameterError("expected a one-dimensional solution vector")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("solution vector must be finite")
    total = float(total)
    if not np.isfinite(total) or total < 0:
        raise ParameterError(f"parent total must be >= 0, got {total}")
    clipped = np.where(arr > 0, arr, 0.0)
    mass = clipped.sum()
    if mass == 0.0:
        return np.full(arr.size, total / arr.size)
    return clipped * (total / mass)


def disaggregate(total: float, odds) -> np.ndarray:
    """Split a parent total among siblings according to their forecast odds.

    Composition of build_system, solve_system, and repair_and_rescale; the
    repair runs unconditionally so the output is nonnegative and sums to
    ``total``. A single-child group bypasses the odds machinery entirely and
    inherits the parent total.
    """
    arr = _odds_values(odds)
    total = float(total)
    if arr.size == 1:
        if not np.isfinite(total) or total < 0:
            raise ParameterError(f"parent total must be >= 0, got {total}")
        return np.array([total])
    raw = solve_system(build_system(arr, total))
    return repair_and_rescale(raw, total)


def system_matrix(n: int) -> np.ndarray:
    """The n x n matrix with zero diagonal and unit off-diagonal entries."""
    if n < 2:
        raise ParameterError(f"system matrix needs n >= 2, got {n}")
    return np.ones((n, n)) - np.eye(n)


def system_matrix_inverse(n: int) -> np.ndarray:
    """Closed-form inverse of :func:`system_matrix`: J/(n-1) - I."""
    if n < 2:
        raise ParameterError(f"system matrix needs n >= 2, got {n}")
    return np.ones((n, n)) / (n - 1) - np.eye(n)
