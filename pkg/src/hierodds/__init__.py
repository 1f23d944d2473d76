"""Top-down hierarchical forecasting of count series via sibling odds.

The total of a three-level hierarchy is forecast directly; every lower-level
series receives its share by forecasting its odds against its siblings and
solving a small structured linear system per step, so the levels always sum
consistently. Includes an INARMA count simulator, four univariate forecast
backends, RMSPE evaluation, and a replication experiment driver, all behind
both a Python API and the ``hierodds`` command line tool.
"""

from .backends import (
    ArFit,
    AutoRegressiveForecaster,
    BackendConfig,
    DriftForecaster,
    ForecastVector,
    MeanForecaster,
    NaiveForecaster,
    ar_fit,
    forecast,
    import_external_forecasts,
    make_backend,
    select_order,
)
from .errors import (
    DataError,
    HieroddsError,
    ParameterError,
    StructureError,
    UndefinedOddsError,
    UndefinedScoreError,
)
from .evaluate import (
    EvalReport,
    ExperimentConfig,
    LevelScores,
    RmspeResult,
    evaluate,
    experiment,
    parse_zero_policy,
    report_json,
    rmspe,
    score_level,
    scores_csv,
    summarize_scores,
    write_report_files,
)
from .hierarchy import (
    LEVEL_BOTTOM,
    LEVEL_MID,
    LEVEL_TOP,
    TOP_ID,
    Hierarchy,
    LevelSeries,
    MidNode,
    SeriesFrame,
    SumViolation,
    ValidationReport,
    aggregate,
    validate,
)
from .pipeline import (
    Diagnostics,
    HierForecast,
    RunConfig,
    TopDownForecaster,
    run_forecast,
    run_with_external,
)
from .reconcile import (
    OddsSystem,
    OddsVector,
    build_system,
    compute_odds,
    disaggregate,
    odds_series,
    repair_and_rescale,
    solve_system,
    system_matrix,
    system_matrix_inverse,
)
from .simulate import (
    HierarchySpec,
    InarmaParams,
    ParamRanges,
    binomial_thinning,
    inarma_generate,
    sample_hierarchy_spec,
    simulate_dataset,
    variable_name,
)

__version__ = "0.1.0"

__all__ = [
    "ArFit",
    "AutoRegressiveForecaster",
    "BackendConfig",
    "DataError",
    "Diagnostics",
    "DriftForecaster",
    "EvalReport",
    "ExperimentConfig",
    "ForecastVector",
    "HierForecast",
    "Hierarchy",
    "HierarchySpec",
    "HieroddsError",
    "InarmaParams",
    "LEVEL_BOTTOM",
    "LEVEL_MID",
    "LEVEL_TOP",
    "LevelScores",
    "LevelSeries",
    "MeanForecaster",
    "MidNode",
    "NaiveForecaster",
    "OddsSystem",
    "OddsVector",
    "ParamRanges",
    "ParameterError",
    "RmspeResult",
    "RunConfig",
    "SeriesFrame",
    "StructureError",
    "SumViolation",
    "TOP_ID",
    "TopDownForecaster",
    "UndefinedOddsError",
    "UndefinedScoreError",
    "ValidationReport",
    "aggregate",
    "ar_fit",
    "binomial_thinning",
    "build_system",
    "compute_odds",
    "disaggregate",
    "evaluate",
    "experiment",
    "forecast",
    "import_external_forecasts",
    "inarma_generate",
    "make_backend",
    "odds_series",
    "parse_zero_policy",
    "report_json",
    "repair_and_rescale",
    "rmspe",
    "run_forecast",
    "run_with_external",
    "sample_hierarchy_spec",
    "score_level",
    "scores_csv",
    "select_order",
    "simulate_dataset",
    "solve_system",
    "summarize_scores",
    "system_matrix",
    "system_matrix_inverse",
    "validate",
    "variable_name",
    "write_report_files",
]
