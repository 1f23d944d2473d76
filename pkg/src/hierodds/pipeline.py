"""Top-down hierarchical forecasting driven by sibling odds.

The pipeline forecasts exactly one value series, the total, with the chosen
backend. Every other series is recovered structurally: each child's share is
captured as an odds series against its siblings, the odds are forecast with
the same backend, and the parent total for each future step is split by
solving the sibling share system and repairing any negative entries. Mids are
split from the total forecast first, then each mid's reconciled forecast
becomes the parent total for its own children, so aggregation consistency
holds at every step by construction.

Forecasts for the total (by id TOP) or for any child's odds series (by the
child id) can be supplied externally instead of fitted, which is how
forecasters living outside this package plug in.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_horizon, check_nonnegative, check_positive
from .backends import BACKEND_KINDS, BackendConfig, import_external_forecasts, make_backend
from .errors import DataError, ParameterError, StructureError, UndefinedOddsError
from .hierarchy import TOP_ID, Hierarchy, LevelSeries, SeriesFrame, aggregate
from .reconcile import OddsVector, build_system, odds_series, repair_and_rescale, solve_system

DEFAULT_TRAIN_LENGTH = 970
DEFAULT_HORIZON = 30
DEFAULT_SMOOTHING = 0.5


@dataclass(frozen=True)
class RunConfig:
    """Settings for one forecasting run.

    smoothing is the additive odds guard used on training shares; the
    fallback value is applied per sibling group when a zero guard leaves
    some timestep with an undefined odds ratio. external_ids lists series
    that must come from the external forecast table rather than a backend.
    """

    backend: BackendConfig
    train_length: int = DEFAULT_TRAIN_LENGTH
    horizon: int = DEFAULT_HORIZON
    smoothing: float = DEFAULT_SMOOTHING
    fallback_smoothing: float = DEFAULT_SMOOTHING
    seed: int | None = None
    external_path: str | None = None
    external_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if not isinstance(self.backend, BackendConfig):
            raise ParameterError("backend must be a BackendConfig")
        if not isinstance(self.train_length, (int, np.integer)) or isinstance(
            self.train_length, bool
        ):
            raise ParameterError(f"train_length must be an integer, got {self.train_length!r}")
        if self.train_length < 1:
            raise ParameterError(f"train_length must be >= 1, got {self.train_length}")
        check_horizon(self.horizon)
        check_nonnegative(self.smoothing, "smoothing")
        check_positive(self.fallback_smoothing, "fallback_smoothing")
        object.__setattr__(self, "external_ids", tuple(self.external_ids))


@dataclass
class Diagnostics:
    """Counts of the repairs and fallbacks one run had to apply.

    The odds smoothing in force is recorded alongside so reports from runs
    with different guards stay comparable.
    """

    smoothing: float = DEFAULT_SMOOTHING
    negative_totals_clamped: int = 0
    negative_odds_clamped: int = 0
    repaired_negatives: int = 0
    undefined_odds_groups: int = 0
    backend_fallbacks: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class HierForecast:
    """Forecast vectors for every node, plus what was repaired along the way."""

    top: np.ndarray
    mid: dict[str, np.ndarray]
    bottom: SeriesFrame
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    @property
    def horizon(self) -> int:
        return len(self.top)

    def as_levels(self) -> LevelSeries:
        return LevelSeries(top=self.top, mid=dict(self.mid), bottom=self.bottom)


class _ForecastSource:
    """Resolves one series forecast: external table, injected hook, or backend."""

    def __init__(self, config, external, forecast_fn, diagnostics):
        self.config = config
        self.external = external or {}
        self.forecast_fn = forecast_fn
        self.diagnostics = diagnostics

    def __call__(self, name: str, series: np.ndarray) -> np.ndarray:
        horizon = self.config.horizon
        if name in self.external:
            values = np.asarray(self.external[name], dtype=float)
            if len(values) != horizon:
                raise DataError(
                    f"external forecast for {name} has {len(values)} steps, expected {horizon}"
                )
            return values.copy()
        if name in self.config.external_ids:
            raise DataError(f"external forecasts are required for {name} but none were provided")
        if self.forecast_fn is not None:
            values = np.asarray(self.forecast_fn(name, series, horizon), dtype=float)
            if values.shape != (horizon,):
                raise DataError(
                    f"injected forecast for {name} has shape {values.shape}, "
                    f"expected ({horizon},)"
                )
            return values
        model = make_backend(self.config.backend)
        model.fit(series)
        if getattr(model, "fell_back_", False):
            self.diagnostics.backend_fallbacks += 1
        return np.asarray(model.predict(horizon), dtype=float)


def _check_external(hierarchy: Hierarchy, config: RunConfig, external) -> None:
    known = {TOP_ID} | set(hierarchy.mid_ids) | set(hierarchy.bottom_ids)
    if external:
        unknown = sorted(set(external) - known)
        if unknown:
            raise StructureError(f"external forecasts name unknown ids: {unknown}")
    bad_required = sorted(set(config.external_ids) - known)
    if bad_required:
        raise StructureError(f"external_ids name unknown ids: {bad_required}")
    provided = set(external or ())
    missing = sorted(set(config.external_ids) - provided)
    if missing:
        raise DataError(f"external forecasts are required for {missing[0]} but none were provided")


def _group_odds_forecasts(
    siblings: dict[str, np.ndarray],
    source: _ForecastSource,
    config: RunConfig,
    diagnostics: Diagnostics,
) -> dict[str, np.ndarray]:
    try:
        history = odds_series(siblings, c=config.smoothing)
    except UndefinedOddsError:
        history = odds_series(siblings, c=config.fallback_smoothing)
        diagnostics.undefined_odds_groups += 1
    forecasts = {}
    for name, odds in history.items():
        hat = source(name, odds)
        negative = hat < 0
        if negative.any():
            diagnostics.negative_odds_clamped += int(negative.sum())
            hat = np.where(negative, 0.0, hat)
        forecasts[name] = hat
    return forecasts


def _split_group(
    totals: np.ndarray,
    odds_hat: dict[str, np.ndarray],
    order: tuple[str, ...],
    diagnostics: Diagnostics,
) -> dict[str, np.ndarray]:
    horizon = len(totals)
    out = {name: np.empty(horizon) for name in order}
    for h in range(horizon):
        odds = OddsVector(np.array([odds_hat[name][h] for name in order]))
        system = build_system(odds, totals[h])
        raw = solve_system(system)
        diagnostics.repaired_negatives += int((raw < 0).sum())
        values = repair_and_rescale(raw, totals[h])
        for j, name in enumerate(order):
            out[name][h] = values[j]
    return out


def run_forecast(
    hierarchy: Hierarchy,
    levels: LevelSeries,
    config: RunConfig,
    external: dict[str, np.ndarray] | None = None,
    forecast_fn=None,
) -> HierForecast:
    """Forecast the whole hierarchy strictly top-down.

    levels supplies observed history; only the first train_length steps are
    used for fitting. forecast_fn, when given, replaces the backend: it is
    called as forecast_fn(name, series, horizon), where name is TOP for the
    total series and a child id for that child's odds series. Entries in
    external take precedence over both.
    """
    if levels.length < config.train_length:
        raise DataError(
            f"train_length {config.train_length} exceeds series length {levels.length}"
        )
    if external is None and config.external_path is not None:
        external = import_external_forecasts(config.external_path)
    _check_external(hierarchy, config, external)
    train = levels.window(0, config.train_length)
    diagnostics = Diagnostics(smoothing=config.smoothing)
    source = _ForecastSource(config, external, forecast_fn, diagnostics)

    top_hat = source(TOP_ID, train.top)
    negative = top_hat < 0
    if negative.any():
        diagnostics.negative_totals_clamped += int(negative.sum())
        top_hat = np.where(negative, 0.0, top_hat)

    mid_ids = hierarchy.mid_ids
    if len(mid_ids) == 1:
        mid_hat = {mid_ids[0]: top_hat.copy()}
    else:
        siblings = {mid_id: train.mid[mid_id] for mid_id in mid_ids}
        odds_hat = _group_odds_forecasts(siblings, source, config, diagnostics)
        mid_hat = _split_group(top_hat, odds_hat, mid_ids, diagnostics)

    bottom_hat: dict[str, np.ndarray] = {}
    for node in hierarchy.mid_nodes:
        totals = mid_hat[node.id]
        if len(node.children) == 1:
            bottom_hat[node.children[0]] = totals.copy()
            continue
        siblings = {child: train.bottom.column(child) for child in node.children}
        odds_hat = _group_odds_forecasts(siblings, source, config, diagnostics)
        split = _split_group(totals, odds_hat, node.children, diagnostics)
        bottom_hat.update(split)

    frame = SeriesFrame({child: bottom_hat[child] for child in hierarchy.bottom_ids})
    return HierForecast(top=top_hat, mid=mid_hat, bottom=frame, diagnostics=diagnostics)


def run_with_external(
    hierarchy: Hierarchy,
    levels: LevelSeries,
    config: RunConfig,
    external: dict[str, np.ndarray],
) -> HierForecast:
    """run_forecast with some forecasts supplied from outside.

    Entries keyed TOP replace the total forecast; entries keyed by a child id
    replace that child's odds forecast. Everything not provided falls back to
    the configured backend.
    """
    return run_forecast(hierarchy, levels, config, external=external)


class TopDownForecaster(BaseEstimator):
    """Estimator wrapper: fit on a bottom-level frame, predict the hierarchy.

    The frame passed to fit must contain a column for every bottom id in the
    hierarchy; mids and the total are aggregated internally. predict returns
    a HierForecast whose levels satisfy the aggregation identities.
    """

    def __init__(self, hierarchy=None, backend="ar", p_max=5, d_max=1, smoothing=0.5):
        self.hierarchy = hierarchy
        self.backend = backend
        self.p_max = p_max
        self.d_max = d_max
        self.smoothing = smoothing

    def fit(self, frame, y=None):
        if self.hierarchy is None:
            raise ParameterError("hierarchy must be set before fitting")
        if not isinstance(self.hierarchy, Hierarchy):
            raise ParameterError("hierarchy must be a Hierarchy")
        if self.backend not in BACKEND_KINDS:
            raise ParameterError(
                f"unknown backend kind '{self.backend}', expected one of {list(BACKEND_KINDS)}"
            )
        if not isinstance(frame, SeriesFrame):
            frame = SeriesFrame(dict(frame))
        self.levels_ = aggregate(self.hierarchy, frame)
        self.train_length_ = frame.length
        return self

    def predict(self, horizon):
        check_horizon(horizon)
        config = RunConfig(
            backend=BackendConfig(kind=self.backend, p_max=self.p_max, d_max=self.d_max),
            train_length=self.train_length_,
            horizon=horizon,
            smoothing=self.smoothing,
        )
        return run_forecast(self.hierarchy, self.levels_, config)
