"""Accuracy scoring and batch replication experiments.

Scores are root mean square percentage errors per node, summarized per level
by quartiles with a 1.5 IQR outlier fence. Zero actuals either drop the step
(skip, the default, with the count reported) or substitute a fixed epsilon
denominator. The experiment driver replays the full simulate / forecast /
evaluate cycle R times with independent sub-seeds, pools the per-node scores,
and emits a report whose bytes depend only on the configuration.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import as_series, check_horizon, check_positive
from .backends import BackendConfig
from .errors import DataError, HieroddsError, ParameterError, UndefinedScoreError
from .hierarchy import TOP_ID, LEVEL_BOTTOM, LEVEL_MID, LEVEL_TOP, LevelSeries, aggregate
from .pipeline import RunConfig, run_forecast
from .simulate import ParamRanges, sample_hierarchy_spec, simulate_dataset

IQR_FENCE = 1.5


class RmspeResult(NamedTuple):
    value: float
    n_excluded: int


def parse_zero_policy(policy: str) -> tuple[str, float | None]:
    """Accepts "skip" or "epsilon:E" with E > 0."""
    if policy == "skip":
        return ("skip", None)
    if isinstance(policy, str) and policy.startswith("epsilon:"):
        raw = policy.split(":", 1)[1]
        try:
            eps = float(raw)
        except ValueError as exc:
            raise ParameterError(f"bad epsilon value in zero policy '{policy}'") from exc
        check_positive(eps, "epsilon")
        return ("epsilon", eps)
    raise ParameterError(f"unknown zero policy '{policy}', expected 'skip' or 'epsilon:E'")


def rmspe(actual, predicted, zero_policy: str = "skip") -> RmspeResult:
    """100 * sqrt(mean(((actual - predicted) / actual)^2)).

    Steps with actual == 0 are dropped under skip (their count comes back in
    n_excluded) or scored against the epsilon denominator. A series with no
    scorable step at all raises UndefinedScoreError.
    """
    a = as_series(actual, "actual", min_length=1)
    p = as_series(predicted, "predicted", min_length=1)
    if len(a) != len(p):
        raise ParameterError(f"length mismatch: {len(a)} actuals vs {len(p)} predictions")
    mode, eps = parse_zero_policy(zero_policy)
    zero = a == 0.0
    if mode == "skip":
        n_excluded = int(zero.sum())
        if n_excluded == len(a):
            raise UndefinedScoreError(
                f"all {n_excluded} steps have zero actuals; no score is defined",
                n_excluded=n_excluded,
            )
        keep = ~zero
        ratio = (a[keep] - p[keep]) / a[keep]
    else:
        # epsilon floors every denominator, not only the zero ones
        n_excluded = 0
        ratio = (a - p) / np.maximum(a, eps)
    return RmspeResult(float(100.0 * np.sqrt(np.mean(ratio**2))), n_excluded)


@dataclass(frozen=True)
class LevelScores:
    """Per-node scores for one level, with pooled distribution summary.

    minimum/quartiles/maximum describe the defined scores; outliers are the
    node ids beyond the 1.5 IQR whisker fences.
    """

    scores: dict[str, float]
    n_excluded: dict[str, int]
    undefined: tuple[str, ...]
    minimum: float | None
    quartiles: tuple[float, float, float] | None
    maximum: float | None
    outliers: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "scores": dict(sorted(self.scores.items())),
            "n_excluded": dict(sorted(self.n_excluded.items())),
            "undefined": sorted(self.undefined),
            "min": self.minimum,
            "quartiles": list(self.quartiles) if self.quartiles is not None else None,
            "max": self.maximum,
            "outliers": sorted(self.outliers),
        }


def summarize_scores(
    scores: dict[str, float],
) -> tuple[float | None, tuple[float, float, float] | None, float | None, tuple[str, ...]]:
    """(min, quartiles, max, outliers) of a score map; quartiles interpolate
    linearly and outliers sit beyond the 1.5 IQR fences."""
    if not scores:
        return None, None, None, ()
    values = np.array(list(scores.values()))
    q1, med, q3 = np.percentile(values, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    lo = q1 - IQR_FENCE * iqr
    hi = q3 + IQR_FENCE * iqr
    outliers = tuple(name for name, v in scores.items() if v < lo or v > hi)
    return (
        float(values.min()),
        (float(q1), float(med), float(q3)),
        float(values.max()),
        outliers,
    )


def score_level(pairs: dict[str, tuple[np.ndarray, np.ndarray]], zero_policy: str) -> LevelScores:
    scores: dict[str, float] = {}
    n_excluded: dict[str, int] = {}
    undefined: list[str] = []
    for name, (actual, predicted) in pairs.items():
        try:
            result = rmspe(actual, predicted, zero_policy)
        except UndefinedScoreError as exc:
            undefined.append(name)
            n_excluded[name] = exc.n_excluded
            continue
        scores[name] = result.value
        n_excluded[name] = result.n_excluded
    minimum, quartiles, maximum, outliers = summarize_scores(scores)
    return LevelScores(
        scores=scores,
        n_excluded=n_excluded,
        undefined=tuple(undefined),
        minimum=minimum,
        quartiles=quartiles,
        maximum=maximum,
        outliers=outliers,
    )


@dataclass(frozen=True)
class EvalReport:
    """Scores for the three levels of one forecast run."""

    top: LevelScores
    mid: LevelScores
    bottom: LevelScores

    def level(self, name: str) -> LevelScores:
        return {LEVEL_TOP: self.top, LEVEL_MID: self.mid, LEVEL_BOTTOM: self.bottom}[name]

    def to_dict(self) -> dict:
        return {
            LEVEL_TOP: self.top.to_dict(),
            LEVEL_MID: self.mid.to_dict(),
            LEVEL_BOTTOM: self.bottom.to_dict(),
        }


def evaluate(predicted, actual: LevelSeries, zero_policy: str = "skip") -> EvalReport:
    """Score every node of a forecast against the matching actuals.

    ``predicted`` is a LevelSeries or anything exposing as_levels(), such as
    a HierForecast.
    """
    if hasattr(predicted, "as_levels"):
        predicted = predicted.as_levels()
    if predicted.length != actual.length:
        raise DataError(
            f"length mismatch: {predicted.length} predicted vs {actual.length} actual steps"
        )
    missing_mid = sorted(set(predicted.mid) - set(actual.mid))
    if missing_mid:
        raise DataError(f"actuals are missing mid series: {missing_mid}")
    missing_bottom = sorted(set(predicted.bottom.ids) - set(actual.bottom.ids))
    if missing_bottom:
        raise DataError(f"actuals are missing bottom series: {missing_bottom}")
    top = score_level({TOP_ID: (actual.top, predicted.top)}, zero_policy)
    mid = score_level(
        {name: (actual.mid[name], predicted.mid[name]) for name in predicted.mid},
        zero_policy,
    )
    bottom = score_level(
        {
            name: (actual.bottom.column(name), predicted.bottom.column(name))
            for name in predicted.bottom.ids
        },
        zero_policy,
    )
    return EvalReport(top=top, mid=mid, bottom=bottom)


@dataclass(frozen=True)
class ExperimentConfig:
    """Full recipe for a replication batch: one seed determines every run."""

    runs: int
    seed: int
    backends: tuple[str, ...] = ("ar",)
    steps: int = 1000
    train_length: int = 970
    horizon: int = 30
    pool_size: int = 54
    param_ranges: ParamRanges = field(default_factory=ParamRanges)
    smoothing: float = 0.5
    p_max: int = 5
    d_max: int = 1
    zero_policy: str = "skip"
    jobs: int = 1
    run_seeds: tuple[int, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.runs, (int, np.integer)) or isinstance(self.runs, bool):
            raise ParameterError(f"runs must be an integer, got {self.runs!r}")
        if self.runs < 1:
            raise ParameterError(f"runs must be >= 1, got {self.runs}")
        object.__setattr__(self, "backends", tuple(self.backends))
        if not self.backends:
            raise ParameterError("at least one backend is required")
        for kind in self.backends:
            BackendConfig(kind=kind, p_max=self.p_max, d_max=self.d_max)
        if len(set(self.backends)) != len(self.backends):
            raise ParameterError(f"duplicate backends: {list(self.backends)}")
        check_horizon(self.horizon)
        if self.train_length + self.horizon > self.steps:
            raise ParameterError(
                f"train_length {self.train_length} + horizon {self.horizon} "
                f"exceeds steps {self.steps}"
            )
        if self.jobs < 1:
            raise ParameterError(f"jobs must be >= 1, got {self.jobs}")
        parse_zero_policy(self.zero_policy)
        if self.run_seeds is not None:
            object.__setattr__(self, "run_seeds", tuple(int(s) for s in self.run_seeds))
            if len(self.run_seeds) != self.runs:
                raise ParameterError(
                    f"run_seeds has {len(self.run_seeds)} entries for {self.runs} runs"
                )

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "seed": self.seed,
            "backends": list(self.backends),
            "steps": self.steps,
            "train_length": self.train_length,
            "horizon": self.horizon,
            "pool_size": self.pool_size,
            "param_ranges": {
                "alpha": list(self.param_ranges.alpha),
                "beta": list(self.param_ranges.beta),
                "lam": list(self.param_ranges.lam),
            },
            "smoothing": self.smoothing,
            "p_max": self.p_max,
            "d_max": self.d_max,
            "zero_policy": self.zero_policy,
            "run_seeds": list(self.run_seeds) if self.run_seeds is not None else None,
        }


def _run_seed(seed: int, run: int) -> int:
    return int(np.random.SeedSequence((seed, 3, run)).generate_state(1)[0])


def _execute_run(args: tuple[ExperimentConfig, int]) -> dict:
    config, run = args
    try:
        if config.run_seeds is not None:
            seed = config.run_seeds[run]
        else:
            seed = _run_seed(config.seed, run)
        spec = sample_hierarchy_spec(config.pool_size, seed)
        hierarchy = spec.to_hierarchy()
        frame = simulate_dataset(
            n_vars=config.pool_size,
            length=config.steps,
            param_ranges=config.param_ranges,
            seed=seed,
            ids=list(spec.selected_ids),
        )
        levels = aggregate(hierarchy, frame)
        actual = levels.window(config.train_length, config.train_length + config.horizon)
        record: dict = {
            "run": run,
            "seed": seed,
            "n_bottom": spec.n_selected,
            "mid_child_counts": list(spec.mid_child_counts),
            "scores": {},
        }
        for kind in config.backends:
            run_config = RunConfig(
                backend=BackendConfig(kind=kind, p_max=config.p_max, d_max=config.d_max),
                train_length=config.train_length,
                horizon=config.horizon,
                smoothing=config.smoothing,
            )
            result = run_forecast(hierarchy, levels, run_config)
            report = evaluate(result.as_levels(), actual, config.zero_policy)
            record["scores"][kind] = {
                "levels": report.to_dict(),
                "diagnostics": result.diagnostics.to_dict(),
            }
        return record
    except HieroddsError as exc:
        return {"run": run, "error": f"{type(exc).__name__}: {exc}"}


def experiment(config: ExperimentConfig) -> dict:
    """Run the replication batch and assemble the deterministic report.

    Individual run failures are recorded in place of scores rather than
    aborting the batch. The report is identical for identical configs no
    matter how many worker processes are used.
    """
    tasks = [(config, run) for run in range(config.runs)]
    if config.jobs > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=min(config.jobs, config.runs)) as pool:
            records = list(pool.map(_execute_run, tasks))
    else:
        records = [_execute_run(task) for task in tasks]
    records.sort(key=lambda r: r["run"])

    summary: dict = {}
    for kind in config.backends:
        summary[kind] = {}
        for level in (LEVEL_TOP, LEVEL_MID, LEVEL_BOTTOM):
            pooled: dict[str, float] = {}
            n_undefined = 0
            for record in records:
                if "error" in record:
                    continue
                level_dict = record["scores"][kind]["levels"][level]
                for node, value in level_dict["scores"].items():
                    pooled[f"run{record['run']}:{node}"] = value
                n_undefined += len(level_dict["undefined"])
            minimum, quartiles, maximum, outliers = summarize_scores(pooled)
            summary[kind][level] = {
                "n_scores": len(pooled),
                "n_undefined": n_undefined,
                "min": minimum,
                "quartiles": list(quartiles) if quartiles is not None else None,
                "max": maximum,
                "n_outliers": len(outliers),
            }

    n_failed = sum(1 for record in records if "error" in record)
    return {
        "config": config.to_dict(),
        "runs": records,
        "summary": summary,
        "n_failed": n_failed,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def scores_csv(report: dict) -> str:
    """Flat per-node score table with columns backend,level,node,rmspe.

    Node keys are prefixed with their run index (run0:TOP) so scores from
    different runs stay distinguishable without extra columns.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["backend", "level", "node", "rmspe"])
    for record in report["runs"]:
        if "error" in record:
            continue
        for kind in sorted(record["scores"]):
            levels = record["scores"][kind]["levels"]
            for level in (LEVEL_TOP, LEVEL_MID, LEVEL_BOTTOM):
                for node, value in sorted(levels[level]["scores"].items()):
                    writer.writerow([kind, level, f"run{record['run']}:{node}", repr(value)])
    return buf.getvalue()


def write_report_files(report: dict, out_dir: str) -> tuple[str, str]:
    """Write report.json and scores.csv under out_dir; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, "report.json")
    csv_path = os.path.join(out_dir, "scores.csv")
    with open(json_path, "w") as handle:
        handle.write(report_json(report))
    with open(csv_path, "w") as handle:
        handle.write(scores_csv(report))
    return json_path, csv_path
