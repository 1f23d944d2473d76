"""Univariate point forecasters for count series.

Four built-in backends share one interface: naive (repeat the last value),
mean (repeat the training mean), drift (extend the first-to-last slope), and
ar (autoregression with optional first differencing and AIC order selection).
All are scikit-learn style estimators with fit(y) / predict(horizon), plus a
functional forecast() wrapper driven by a BackendConfig.

Forecasts produced elsewhere can be injected through import_external_forecasts,
which reads an id,step,value table into per-id horizon vectors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import as_series, check_horizon
from .errors import DataError, ParameterError

BACKEND_KINDS = ("naive", "mean", "drift", "ar")

# ln(sigma2) floor keeps a perfect fit comparable instead of -inf
_SIGMA2_FLOOR = 1e-300


SELECTION_MODES = ("aic", "fixed")


@dataclass(frozen=True)
class BackendConfig:
    """Backend choice plus the ar options (ignored by other kinds).

    selection "aic" searches orders 0..p_max; "fixed" uses exactly p_max.
    """

    kind: str
    p_max: int = 5
    d_max: int = 1
    selection: str = "aic"

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ParameterError(
                f"unknown backend kind '{self.kind}', expected one of {list(BACKEND_KINDS)}"
            )
        if not isinstance(self.p_max, (int, np.integer)) or isinstance(self.p_max, bool):
            raise ParameterError(f"p_max must be an integer, got {self.p_max!r}")
        if not isinstance(self.d_max, (int, np.integer)) or isinstance(self.d_max, bool):
            raise ParameterError(f"d_max must be an integer, got {self.d_max!r}")
        if self.p_max < 0:
            raise ParameterError(f"p_max must be >= 0, got {self.p_max}")
        if self.d_max not in (0, 1):
            raise ParameterError(f"d_max must be 0 or 1, got {self.d_max}")
        if self.selection not in SELECTION_MODES:
            raise ParameterError(
                f"selection must be one of {list(SELECTION_MODES)}, got {self.selection!r}"
            )


@dataclass(frozen=True)
class ForecastVector:
    """A horizon of point forecasts plus where and how they were made."""

    values: np.ndarray
    origin: int
    backend: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise ParameterError("forecast values must be a nonempty vector")
        if not np.all(np.isfinite(values)):
            raise DataError("forecast values must be finite")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class ArFit:
    """One fitted autoregression: y_t = intercept + sum_i coef[i] * y_{t-i}."""

    order: int
    coef: np.ndarray
    intercept: float
    sigma2: float
    aic: float
    fell_back: bool = False


def _centered_mean(y: np.ndarray) -> float:
    # anchored at y[0] so a constant series recovers its value exactly
    return float(y[0] + np.mean(y - y[0]))


def _design(y: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    n = len(y) - p
    cols = [np.ones(n)]
    for lag in range(1, p + 1):
        cols.append(y[p - lag : p - lag + n])
    return np.column_stack(cols), y[p:]


def ar_fit(y: np.ndarray, p: int, d: int = 0) -> ArFit:
    """Least-squares fit of an order-p autoregression with intercept.

    The series is differenced d times first. A rank-deficient design falls
    back to the order-0 fit on the same differenced series and flags it.
    """
    y = as_series(y, "series", min_length=1)
    if p < 0:
        raise ParameterError(f"order must be >= 0, got {p}")
    if d not in (0, 1):
        raise ParameterError(f"difference order must be 0 or 1, got {d}")
    if d == 1:
        if len(y) < 2:
            raise DataError(f"series of length {len(y)} cannot be differenced")
        y = np.diff(y)
    if p == 0:
        mean = _centered_mean(y)
        resid = y - mean
        sigma2 = float(np.mean(resid**2))
        aic = _aic(sigma2, len(y), 0)
        return ArFit(order=0, coef=np.zeros(0), intercept=mean, sigma2=sigma2, aic=aic)
    if len(y) < p + 2:
        raise DataError(f"series of length {len(y)} is too short to fit order {p}")
    x, target = _design(y, p)
    beta, _, rank, _ = np.linalg.lstsq(x, target, rcond=None)
    if rank < p + 1:
        base = ar_fit(y, 0)
        return ArFit(
            order=0,
            coef=base.coef,
            intercept=base.intercept,
            sigma2=base.sigma2,
            aic=base.aic,
            fell_back=True,
        )
    resid = target - x @ beta
    sigma2 = float(np.mean(resid**2))
    aic = _aic(sigma2, len(target), p)
    return ArFit(order=p, coef=beta[1:], intercept=float(beta[0]), sigma2=sigma2, aic=aic)


def _aic(sigma2: float, n: int, p: int) -> float:
    return float(n * np.log(max(sigma2, _SIGMA2_FLOOR)) + 2 * (p + 1))


def _choose_d(y: np.ndarray, d_max: int) -> int:
    if d_max >= 1 and len(y) >= 3 and np.var(np.diff(y)) < np.var(y):
        return 1
    return 0


def select_order(y: np.ndarray, config: BackendConfig) -> tuple[int, int]:
    """Pick (p, d) for an autoregression on the given series.

    d is 1 exactly when differencing once shrinks the sample variance (and
    d_max allows it). Under "aic" selection, p minimizes AIC over 0..p_max on
    the d-times-differenced series with ties toward the smaller order; under
    "fixed" selection p is p_max as given.
    """
    y = as_series(y, "series", min_length=1)
    needed = config.p_max + config.d_max + 2
    if len(y) < needed:
        raise DataError(
            f"order selection needs at least {needed} observations "
            f"for p_max={config.p_max}, d_max={config.d_max}, got {len(y)}"
        )
    d = _choose_d(y, config.d_max)
    if config.selection == "fixed":
        return config.p_max, d
    work = np.diff(y) if d == 1 else y
    best_p = 0
    best_aic = ar_fit(work, 0).aic
    for p in range(1, config.p_max + 1):
        aic = ar_fit(work, p).aic
        if aic < best_aic:
            best_p, best_aic = p, aic
    return best_p, d


def _iterate_forecast(fit: ArFit, history: np.ndarray, horizon: int) -> np.ndarray:
    buf = list(history[-fit.order :]) if fit.order else []
    out = np.empty(horizon)
    for h in range(horizon):
        val = fit.intercept
        for i in range(fit.order):
            val += fit.coef[i] * buf[-1 - i]
        out[h] = val
        if fit.order:
            buf.append(val)
    return out


class NaiveForecaster(BaseEstimator):
    """Repeat the last observed value."""

    def fit(self, y):
        y = as_series(y, "series", min_length=1)
        self.last_ = float(y[-1])
        return self

    def predict(self, horizon):
        check_horizon(horizon)
        return np.full(horizon, self.last_)


class MeanForecaster(BaseEstimator):
    """Repeat the training mean."""

    def fit(self, y):
        y = as_series(y, "series", min_length=1)
        self.mean_ = _centered_mean(y)
        return self

    def predict(self, horizon):
        check_horizon(horizon)
        return np.full(horizon, self.mean_)


class DriftForecaster(BaseEstimator):
    """Extend the straight line through the first and last observations."""

    def fit(self, y):
        y = as_series(y, "series", min_length=2)
        self.last_ = float(y[-1])
        self.slope_ = float((y[-1] - y[0]) / (len(y) - 1))
        return self

    def predict(self, horizon):
        check_horizon(horizon)
        return self.last_ + self.slope_ * np.arange(1, horizon + 1)


class AutoRegressiveForecaster(BaseEstimator):
    """Autoregression with optional first differencing and AIC order choice.

    Differences once when that shrinks the sample variance (and d_max allows),
    then picks the order per the selection mode. Multi-step forecasts are
    iterated one step at a time, feeding each prediction back as history.
    """

    def __init__(self, p_max=5, d_max=1, selection="aic"):
        self.p_max = p_max
        self.d_max = d_max
        self.selection = selection

    def fit(self, y):
        y = as_series(y, "series", min_length=3)
        # cap the search space to what the sample can estimate
        d_max = self.d_max if len(y) >= self.d_max + 2 else 0
        p_max = max(0, min(self.p_max, len(y) - d_max - 2))
        config = BackendConfig(
            kind="ar", p_max=p_max, d_max=d_max, selection=self.selection
        )
        p, d = select_order(y, config)
        self.order_ = p
        self.d_ = d
        self.fit_ = ar_fit(y, p, d)
        self.coef_ = self.fit_.coef
        self.intercept_ = self.fit_.intercept
        self.aic_ = self.fit_.aic
        self.fell_back_ = self.fit_.fell_back
        self.history_ = np.diff(y) if d == 1 else y
        self.last_level_ = float(y[-1])
        return self

    def predict(self, horizon):
        check_horizon(horizon)
        steps = _iterate_forecast(self.fit_, self.history_, horizon)
        if self.d_ == 1:
            return self.last_level_ + np.cumsum(steps)
        return steps


def make_backend(config: BackendConfig) -> BaseEstimator:
    if config.kind == "naive":
        return NaiveForecaster()
    if config.kind == "mean":
        return MeanForecaster()
    if config.kind == "drift":
        return DriftForecaster()
    return AutoRegressiveForecaster(
        p_max=config.p_max, d_max=config.d_max, selection=config.selection
    )


def forecast(series: np.ndarray, horizon: int, config: BackendConfig) -> ForecastVector:
    """Fit the configured backend on the series and forecast the horizon."""
    series = as_series(series, "series", min_length=1)
    model = make_backend(config)
    model.fit(series)
    values = np.asarray(model.predict(horizon), dtype=float)
    return ForecastVector(values=values, origin=len(series) - 1, backend=config.kind)


def import_external_forecasts(path: str) -> dict[str, np.ndarray]:
    """Read an id,step,value table into per-id forecast vectors.

    Steps for each id must be exactly 1..H with no duplicates or gaps; H may
    differ per id here and is checked against the run horizon at use time.
    """
    rows: dict[str, dict[int, float]] = {}
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read external forecasts from {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        fields = reader.fieldnames or []
        missing = [c for c in ("id", "step", "value") if c not in fields]
        if missing:
            raise DataError(f"{path} is missing required columns: {missing}")
        for lineno, row in enumerate(reader, start=2):
            sid = (row["id"] or "").strip()
            if not sid:
                raise DataError(f"{path} line {lineno}: empty id")
            try:
                step = int(row["step"])
                value = float(row["value"])
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path} line {lineno}: {exc}") from exc
            if not np.isfinite(value):
                raise DataError(f"{path} line {lineno}: value for {sid} is not finite")
            per_id = rows.setdefault(sid, {})
            if step in per_id:
                raise DataError(f"{path}: duplicate step {step} for id {sid}")
            per_id[step] = value
    if not rows:
        raise DataError(f"{path} contains no forecast rows")
    out: dict[str, np.ndarray] = {}
    for sid, steps in rows.items():
        expected = set(range(1, len(steps) + 1))
        if set(steps) != expected:
            raise DataError(
                f"{path}: steps for id {sid} must be 1..{len(steps)} with no gaps"
            )
        out[sid] = np.array([steps[h] for h in sorted(steps)], dtype=float)
    return out
