"""Command line entry point.

One binary, four subcommands:

  simulate    write a simulated bottom-level series frame and a sampled
              hierarchy to an output directory
  forecast    run the top-down pipeline on a hierarchy + series file
  evaluate    score a forecast file against an actuals file
  experiment  replicate simulate/forecast/evaluate R times and report

Exit codes: 0 success, 1 data or parameter errors, 2 usage errors. Status
messages go to standard error; machine-readable output goes to files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .backends import BACKEND_KINDS, BackendConfig
from .errors import DataError, HieroddsError, ParameterError
from .evaluate import (
    EvalReport,
    ExperimentConfig,
    experiment,
    parse_zero_policy,
    score_level,
    write_report_files,
)
from .hierarchy import (
    LEVEL_BOTTOM,
    LEVEL_MID,
    LEVEL_TOP,
    TOP_ID,
    Hierarchy,
    LevelSeries,
    SeriesFrame,
    aggregate,
)
from .pipeline import (
    DEFAULT_HORIZON,
    DEFAULT_SMOOTHING,
    DEFAULT_TRAIN_LENGTH,
    RunConfig,
    run_forecast,
)
from .simulate import ParamRanges, sample_hierarchy_spec, simulate_dataset

DEFAULT_VARS = 54
DEFAULT_STEPS = 1000

LEVELS = (LEVEL_TOP, LEVEL_MID, LEVEL_BOTTOM)


def _read_json(path: str) -> dict:
    try:
        with open(path) as handle:
            payload = json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError(f"{path} must contain a JSON object")
    return payload


def _check_keys(payload: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(payload) - allowed)
    if unknown:
        raise ParameterError(f"{path} has unknown keys: {unknown}")


def _param_ranges_from(payload: dict, path: str) -> ParamRanges:
    raw = payload.get("param_ranges")
    if raw is None:
        return ParamRanges()
    if not isinstance(raw, dict):
        raise ParameterError(f"{path}: param_ranges must be an object")
    _check_keys(raw, {"alpha", "beta", "lam"}, f"{path} param_ranges")
    kwargs = {}
    for name in ("alpha", "beta", "lam"):
        if name in raw:
            pair = raw[name]
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ParameterError(f"{path}: param_ranges.{name} must be a [low, high] pair")
            kwargs[name] = (float(pair[0]), float(pair[1]))
    return ParamRanges(**kwargs)


def _write_json(payload: dict, path: str) -> None:
    with open(path, "w") as handle:
        handle.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_level_csv(levels: LevelSeries, hierarchy: Hierarchy, path: str) -> None:
    """level,id,step,value rows in hierarchy order; steps count from 1."""
    lines = ["level,id,step,value"]

    def emit(level: str, sid: str, values: np.ndarray) -> None:
        for step, value in enumerate(values, start=1):
            lines.append(f"{level},{sid},{step},{float(value)!r}")

    emit(LEVEL_TOP, TOP_ID, levels.top)
    for mid_id in hierarchy.mid_ids:
        emit(LEVEL_MID, mid_id, levels.mid[mid_id])
    for bottom_id in hierarchy.bottom_ids:
        emit(LEVEL_BOTTOM, bottom_id, levels.bottom.column(bottom_id))
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def _read_level_csv(path: str) -> dict[str, dict[str, np.ndarray]]:
    """Parse a level,id,step,value file into per-level id -> vector maps."""
    try:
        with open(path) as handle:
            lines = handle.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0].strip() != "level,id,step,value":
        raise DataError(f"{path} must start with header 'level,id,step,value'")
    cells: dict[str, dict[str, dict[int, float]]] = {level: {} for level in LEVELS}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise DataError(f"{path} line {lineno}: expected 4 fields, got {len(parts)}")
        level, sid, step_raw, value_raw = (p.strip() for p in parts)
        if level not in LEVELS:
            raise DataError(f"{path} line {lineno}: unknown level '{level}'")
        try:
            step = int(step_raw)
            value = float(value_raw)
        except ValueError as exc:
            raise DataError(f"{path} line {lineno}: {exc}") from exc
        per_id = cells[level].setdefault(sid, {})
        if step in per_id:
            raise DataError(f"{path}: duplicate step {step} for {level} id {sid}")
        per_id[step] = value
    out: dict[str, dict[str, np.ndarray]] = {}
    for level, ids in cells.items():
        out[level] = {}
        for sid, steps in ids.items():
            expected = set(range(1, len(steps) + 1))
            if set(steps) != expected:
                raise DataError(f"{path}: steps for {level} id {sid} must be 1..{len(steps)}")
            out[level][sid] = np.array([steps[h] for h in sorted(steps)], dtype=float)
    return out


def _cmd_simulate(args) -> int:
    config = _read_json(args.config) if args.config else {}
    if args.config:
        _check_keys(
            config, {"vars", "steps", "seed", "burn_in", "param_ranges"}, args.config
        )
    n_vars = args.vars if args.vars is not None else int(config.get("vars", DEFAULT_VARS))
    steps = args.steps if args.steps is not None else int(config.get("steps", DEFAULT_STEPS))
    seed = args.seed if args.seed is not None else config.get("seed")
    if seed is None:
        print("error: simulate needs --seed or a 'seed' entry in --config", file=sys.stderr)
        return 2
    ranges = _param_ranges_from(config, args.config or "--config")
    kwargs = {}
    if "burn_in" in config:
        kwargs["burn_in"] = int(config["burn_in"])
    frame = simulate_dataset(
        n_vars=n_vars, length=steps, param_ranges=ranges, seed=int(seed), **kwargs
    )
    spec = sample_hierarchy_spec(pool_size=n_vars, seed=int(seed))
    os.makedirs(args.out, exist_ok=True)
    series_path = os.path.join(args.out, "series.csv")
    hierarchy_path = os.path.join(args.out, "hierarchy.json")
    frame.to_csv(series_path)
    payload = spec.to_hierarchy().to_dict()
    payload["spec"] = spec.to_dict()
    _write_json(payload, hierarchy_path)
    print(f"wrote {series_path} and {hierarchy_path}", file=sys.stderr)
    return 0


def _cmd_forecast(args) -> int:
    hierarchy = Hierarchy.from_json(args.hierarchy)
    frame = SeriesFrame.from_csv(args.series)
    config_payload = _read_json(args.config)
    _check_keys(
        config_payload,
        {
            "train_length",
            "horizon",
            "smoothing",
            "fallback_smoothing",
            "seed",
            "external_ids",
            "p_max",
            "d_max",
        },
        args.config,
    )
    backend = BackendConfig(
        kind=args.backend,
        p_max=int(config_payload.get("p_max", 5)),
        d_max=int(config_payload.get("d_max", 1)),
    )
    config = RunConfig(
        backend=backend,
        train_length=int(config_payload.get("train_length", DEFAULT_TRAIN_LENGTH)),
        horizon=int(config_payload.get("horizon", DEFAULT_HORIZON)),
        smoothing=float(config_payload.get("smoothing", DEFAULT_SMOOTHING)),
        fallback_smoothing=float(
            config_payload.get("fallback_smoothing", DEFAULT_SMOOTHING)
        ),
        seed=config_payload.get("seed"),
        external_path=args.external,
        external_ids=tuple(config_payload.get("external_ids", ())),
    )
    levels = aggregate(hierarchy, frame)
    result = run_forecast(hierarchy, levels, config)

    os.makedirs(args.out, exist_ok=True)
    forecast_path = os.path.join(args.out, "forecast.csv")
    _write_level_csv(result.as_levels(), hierarchy, forecast_path)
    diag_path = os.path.join(args.out, "diagnostics.json")
    _write_json(
        {
            "backend": args.backend,
            "train_length": config.train_length,
            "horizon": config.horizon,
            "counts": result.diagnostics.to_dict(),
        },
        diag_path,
    )
    written = [forecast_path, diag_path]
    if levels.length >= config.train_length + config.horizon:
        actual = levels.window(config.train_length, config.train_length + config.horizon)
        actual_path = os.path.join(args.out, "actuals.csv")
        _write_level_csv(actual, hierarchy, actual_path)
        written.append(actual_path)
    print(f"wrote {', '.join(written)}", file=sys.stderr)
    return 0


def _score_from_files(
    forecast: dict[str, dict[str, np.ndarray]],
    actual: dict[str, dict[str, np.ndarray]],
    zero_policy: str,
    forecast_path: str,
    actual_path: str,
) -> EvalReport:
    horizons = {vec.size for ids in forecast.values() for vec in ids.values()}
    if not horizons:
        raise DataError(f"{forecast_path} contains no forecast rows")
    if len(horizons) > 1:
        raise DataError(f"{forecast_path}: all series must share one horizon, got {sorted(horizons)}")
    per_level = {}
    for level in LEVELS:
        pairs = {}
        for sid, predicted in forecast[level].items():
            if sid not in actual[level]:
                raise DataError(f"{actual_path} is missing {level} id {sid}")
            truth = actual[level][sid]
            if truth.size != predicted.size:
                raise DataError(
                    f"{actual_path}: {level} id {sid} has {truth.size} steps, "
                    f"forecast has {predicted.size}"
                )
            pairs[sid] = (truth, predicted)
        per_level[level] = score_level(pairs, zero_policy)
    return EvalReport(
        top=per_level[LEVEL_TOP], mid=per_level[LEVEL_MID], bottom=per_level[LEVEL_BOTTOM]
    )


def _cmd_evaluate(args) -> int:
    parse_zero_policy(args.zero_policy)
    forecast = _read_level_csv(args.forecast)
    actual = _read_level_csv(args.actual)
    if not forecast[LEVEL_TOP]:
        raise DataError(f"{args.forecast} has no top-level rows")
    report = _score_from_files(
        forecast, actual, args.zero_policy, args.forecast, args.actual
    )
    os.makedirs(args.out, exist_ok=True)
    json_path = os.path.join(args.out, "report.json")
    _write_json({"zero_policy": args.zero_policy, "levels": report.to_dict()}, json_path)
    csv_path = os.path.join(args.out, "scores.csv")
    lines = ["backend,level,node,rmspe"]
    for level in LEVELS:
        for node, value in sorted(report.level(level).scores.items()):
            lines.append(f",{level},{node},{value!r}")
    with open(csv_path, "w") as handle:
        handle.write("\n".join(lines) + "\n")
    print(f"wrote {json_path} and {csv_path}", file=sys.stderr)
    return 0


def _cmd_experiment(args) -> int:
    backends = tuple(b.strip() for b in args.backend.split(",") if b.strip())
    payload = _read_json(args.config) if args.config else {}
    if args.config:
        _check_keys(
            payload,
            {
                "steps",
                "train_length",
                "horizon",
                "pool_size",
                "param_ranges",
                "smoothing",
                "zero_policy",
                "p_max",
                "d_max",
            },
            args.config,
        )
    config = ExperimentConfig(
        runs=args.runs,
        seed=args.seed,
        backends=backends,
        steps=int(payload.get("steps", 1000)),
        train_length=int(payload.get("train_length", DEFAULT_TRAIN_LENGTH)),
        horizon=int(payload.get("horizon", DEFAULT_HORIZON)),
        pool_size=int(payload.get("pool_size", DEFAULT_VARS)),
        param_ranges=_param_ranges_from(payload, args.config or "--config"),
        smoothing=float(payload.get("smoothing", DEFAULT_SMOOTHING)),
        p_max=int(payload.get("p_max", 5)),
        d_max=int(payload.get("d_max", 1)),
        zero_policy=str(payload.get("zero_policy", "skip")),
        jobs=args.jobs,
    )
    report = experiment(config)
    json_path, csv_path = write_report_files(report, args.out)
    failed = report["n_failed"]
    status = f"{config.runs - failed}/{config.runs} runs succeeded"
    print(f"wrote {json_path} and {csv_path} ({status})", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hierodds",
        description="Top-down hierarchical forecasting with sibling odds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate count series and a hierarchy")
    p_sim.add_argument("--vars", type=int, default=None, help=f"pool size (default {DEFAULT_VARS})")
    p_sim.add_argument(
        "--steps", type=int, default=None, help=f"series length (default {DEFAULT_STEPS})"
    )
    p_sim.add_argument("--seed", type=int, default=None, help="root seed")
    p_sim.add_argument("--config", default=None, help="JSON file with ranges and defaults")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=_cmd_simulate)

    p_fc = sub.add_parser("forecast", help="forecast a hierarchy top-down")
    p_fc.add_argument("--hierarchy", required=True, help="hierarchy JSON file")
    p_fc.add_argument("--series", required=True, help="bottom-level series CSV")
    p_fc.add_argument("--config", required=True, help="run config JSON file")
    p_fc.add_argument("--backend", required=True, choices=BACKEND_KINDS)
    p_fc.add_argument("--external", default=None, help="external forecast CSV (id,step,value)")
    p_fc.add_argument("--out", required=True, help="output directory")
    p_fc.set_defaults(func=_cmd_forecast)

    p_ev = sub.add_parser("evaluate", help="score a forecast against actuals")
    p_ev.add_argument("--forecast", required=True, help="forecast CSV (level,id,step,value)")
    p_ev.add_argument("--actual", required=True, help="actuals CSV (level,id,step,value)")
    p_ev.add_argument("--zero-policy", default="skip", help="'skip' or 'epsilon:E'")
    p_ev.add_argument("--out", required=True, help="output directory")
    p_ev.set_defaults(func=_cmd_evaluate)

    p_ex = sub.add_parser("experiment", help="replicated simulate/forecast/evaluate")
    p_ex.add_argument("--runs", type=int, required=True)
    p_ex.add_argument("--backend", required=True, help="backend kind(s), comma separated")
    p_ex.add_argument("--seed", type=int, required=True)
    p_ex.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p_ex.add_argument("--config", default=None, help="JSON file with simulation settings")
    p_ex.add_argument("--out", required=True, help="output directory")
    p_ex.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except HieroddsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
