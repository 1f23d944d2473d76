"""Tests for RMSPE scoring and the batch experiment driver."""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierodds import (
    BackendConfig,
    DataError,
    ExperimentConfig,
    Hierarchy,
    LevelSeries,
    MidNode,
    ParamRanges,
    ParameterError,
    RunConfig,
    SeriesFrame,
    UndefinedScoreError,
    aggregate,
    evaluate,
    experiment,
    parse_zero_policy,
    report_json,
    rmspe,
    run_forecast,
    score_level,
    scores_csv,
    summarize_scores,
    write_report_files,
)


class TestRmspe:
    def test_symmetric_ten_percent(self):
        assert rmspe([100.0, 100.0], [90.0, 110.0]).value == 10.0

    def test_identity_is_zero(self):
        assert rmspe([3.0, 7.0, 11.0], [3.0, 7.0, 11.0]).value == 0.0

    def test_skip_drops_zero_actuals(self):
        result = rmspe([10.0, 0.0, 20.0], [11.0, 5.0, 18.0])
        assert result.value == pytest.approx(10.0, abs=1e-12)
        assert result.n_excluded == 1

    def test_all_zero_actuals_is_undefined(self):
        with pytest.raises(UndefinedScoreError) as info:
            rmspe([0.0, 0.0], [1.0, 2.0])
        assert info.value.n_excluded == 2

    def test_epsilon_floors_every_denominator(self):
        # epsilon applies to all entries, so small actuals are also damped
        a = [0.0, 0.5, 10.0]
        p = [1.0, 1.0, 12.0]
        result = rmspe(a, p, "epsilon:1.0")
        want = 100.0 * np.sqrt(np.mean([(0 - 1) ** 2, (0.5 - 1) ** 2, ((10 - 12) / 10) ** 2]))
        assert result.value == pytest.approx(want, rel=1e-12)
        assert result.n_excluded == 0

    def test_epsilon_leaves_large_actuals_alone(self):
        plain = rmspe([100.0, 100.0], [90.0, 110.0], "epsilon:0.5")
        assert plain.value == 10.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ParameterError):
            rmspe([1.0, 2.0], [1.0])

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            rmspe([], [])

    @given(
        st.lists(st.floats(min_value=0.5, max_value=100), min_size=1, max_size=20),
        st.floats(min_value=0.01, max_value=1000),
    )
    @settings(max_examples=200, deadline=None)
    def test_scale_invariant(self, actual, lam):
        a = np.array(actual)
        p = a * 1.1
        base = rmspe(a, p).value
        scaled = rmspe(lam * a, lam * p).value
        assert abs(base - scaled) < 1e-9

    @given(st.lists(st.floats(min_value=0.5, max_value=100), min_size=1, max_size=20))
    @settings(max_examples=100, deadline=None)
    def test_zero_iff_equal(self, actual):
        a = np.array(actual)
        assert rmspe(a, a).value == 0.0
        assert rmspe(a, a + 0.25).value > 0.0


class TestZeroPolicy:
    def test_skip(self):
        assert parse_zero_policy("skip") == ("skip", None)

    def test_epsilon(self):
        assert parse_zero_policy("epsilon:0.5") == ("epsilon", 0.5)

    @pytest.mark.parametrize("text", ["drop", "epsilon", "epsilon:0", "epsilon:-1", "epsilon:x"])
    def test_rejects_malformed(self, text):
        with pytest.raises(ParameterError):
            parse_zero_policy(text)


class TestLevelScores:
    def test_summary_matches_recomputation(self):
        rng = np.random.default_rng(2)
        scores = {f"n{i}": float(v) for i, v in enumerate(rng.uniform(0, 50, 23))}
        minimum, quartiles, maximum, outliers = summarize_scores(scores)
        values = np.array(list(scores.values()))
        assert minimum == values.min()
        assert maximum == values.max()
        assert quartiles == tuple(np.percentile(values, [25, 50, 75]))
        assert quartiles[0] <= quartiles[1] <= quartiles[2]
        assert outliers == ()

    def test_outlier_beyond_upper_fence_listed(self):
        scores = {f"n{i}": 10.0 + 0.1 * i for i in range(12)}
        scores["wild"] = 500.0
        _, (q1, _, q3), _, outliers = summarize_scores(scores)
        assert 500.0 > q3 + 1.5 * (q3 - q1)
        assert outliers == ("wild",)

    def test_outlier_below_lower_fence_listed(self):
        scores = {f"n{i}": 50.0 + 0.1 * i for i in range(12)}
        scores["tiny"] = 0.1
        _, (q1, _, q3), _, outliers = summarize_scores(scores)
        assert 0.1 < q1 - 1.5 * (q3 - q1)
        assert "tiny" in outliers

    def test_inside_fence_not_listed(self):
        # the doubled-error node is an outlier only once it crosses the fence
        base = {f"n{i}": 10.0 for i in range(8)}
        base["double"] = 20.0
        _, (q1, _, q3), _, outliers = summarize_scores(base)
        assert 20.0 > q3 + 1.5 * (q3 - q1)
        assert outliers == ("double",)
        spread = {f"n{i}": 10.0 + 3.0 * i for i in range(8)}
        spread["double"] = 20.0
        _, (q1, _, q3), _, outliers = summarize_scores(spread)
        assert 20.0 <= q3 + 1.5 * (q3 - q1)
        assert outliers == ()

    def test_empty_scores_summarize_to_none(self):
        assert summarize_scores({}) == (None, None, None, ())

    def test_undefined_nodes_kept_separate(self):
        pairs = {
            "good": (np.array([10.0, 20.0]), np.array([11.0, 21.0])),
            "allzero": (np.array([0.0, 0.0]), np.array([1.0, 1.0])),
        }
        level = score_level(pairs, "skip")
        assert set(level.scores) == {"good"}
        assert level.undefined == ("allzero",)
        assert level.n_excluded["allzero"] == 2
        d = level.to_dict()
        assert d["undefined"] == ["allzero"]
        assert d["min"] == d["max"] == level.scores["good"]


def two_group_hier():
    return Hierarchy(
        mid_nodes=(MidNode("A", ("x1", "x2")), MidNode("B", ("x3", "x4", "x5")))
    )


def levels_from(hier, seed, length):
    rng = np.random.default_rng(seed)
    frame = SeriesFrame({b: rng.uniform(5, 15, length) for b in hier.bottom_ids})
    return aggregate(hier, frame)


class TestEvaluate:
    def test_perfect_forecast_scores_zero(self):
        hier = two_group_hier()
        actual = levels_from(hier, 3, 10)
        report = evaluate(actual, actual)
        for level in ("top", "mid", "bottom"):
            scores = report.level(level).scores
            assert scores and all(v == 0.0 for v in scores.values())
            assert report.level(level).outliers == ()

    def test_scores_match_direct_recomputation(self):
        hier = two_group_hier()
        levels = levels_from(hier, 4, 80)
        config = RunConfig(backend=BackendConfig("naive"), train_length=50, horizon=30)
        result = run_forecast(hier, levels, config)
        actual = levels.window(50, 80)
        report = evaluate(result, actual)
        for name in hier.bottom_ids:
            direct = rmspe(actual.bottom.column(name), result.bottom.column(name)).value
            assert report.bottom.scores[name] == direct
        direct_top = rmspe(actual.top, result.top).value
        assert report.top.scores["TOP"] == direct_top

    def test_accepts_hier_forecast_directly(self):
        hier = two_group_hier()
        levels = levels_from(hier, 5, 60)
        config = RunConfig(backend=BackendConfig("mean"), train_length=40, horizon=20)
        result = run_forecast(hier, levels, config)
        actual = levels.window(40, 60)
        via_object = evaluate(result, actual)
        via_levels = evaluate(result.as_levels(), actual)
        assert via_object.to_dict() == via_levels.to_dict()

    def test_horizon_mismatch_rejected(self):
        hier = two_group_hier()
        a = levels_from(hier, 6, 10)
        b = levels_from(hier, 6, 12)
        with pytest.raises(DataError):
            evaluate(a, b)

    def test_missing_actual_series_rejected(self):
        hier = two_group_hier()
        predicted = levels_from(hier, 7, 10)
        partial = LevelSeries(
            top=predicted.top,
            mid=dict(predicted.mid),
            bottom=predicted.bottom.subset(["x1", "x2", "x3", "x4"]),
        )
        with pytest.raises(DataError, match="x5"):
            evaluate(predicted, partial)


class TestExperimentConfig:
    def base(self, **kw):
        args = dict(runs=2, seed=1, backends=("naive",), steps=120, train_length=90, horizon=30)
        args.update(kw)
        return ExperimentConfig(**args)

    def test_valid(self):
        cfg = self.base()
        assert cfg.jobs == 1
        assert cfg.to_dict()["runs"] == 2

    def test_rejects_bad_shapes(self):
        with pytest.raises(ParameterError):
            self.base(runs=0)
        with pytest.raises(ParameterError):
            self.base(backends=())
        with pytest.raises(ParameterError):
            self.base(backends=("naive", "naive"))
        with pytest.raises(ParameterError):
            self.base(backends=("gru",))
        with pytest.raises(ParameterError):
            self.base(train_length=100, horizon=30, steps=120)
        with pytest.raises(ParameterError):
            self.base(run_seeds=(1,))
        with pytest.raises(ParameterError):
            self.base(zero_policy="nope")


class TestExperiment:
    def test_degenerate_simulation_scores_zero(self):
        # a vanishing rate makes every series identically zero; with an
        # epsilon floor the naive forecast is then exact everywhere
        cfg = ExperimentConfig(
            runs=1,
            seed=42,
            backends=("naive",),
            steps=80,
            train_length=50,
            horizon=30,
            param_ranges=ParamRanges(lam=(1e-9, 1e-9)),
            zero_policy="epsilon:1.0",
        )
        rep = experiment(cfg)
        assert rep["n_failed"] == 0
        levels = rep["runs"][0]["scores"]["naive"]["levels"]
        for level in ("top", "mid", "bottom"):
            assert levels[level]["scores"]
            assert all(v == 0.0 for v in levels[level]["scores"].values())

    def test_identical_run_seeds_identical_scores(self):
        cfg = ExperimentConfig(
            runs=2,
            seed=7,
            backends=("naive",),
            steps=120,
            train_length=90,
            horizon=30,
            run_seeds=(5, 5),
        )
        rep = experiment(cfg)
        first, second = rep["runs"]
        assert first["seed"] == second["seed"] == 5
        assert first["scores"] == second["scores"]

    def test_every_run_records_its_seed(self):
        cfg = ExperimentConfig(
            runs=3, seed=9, backends=("naive",), steps=120, train_length=90, horizon=30
        )
        rep = experiment(cfg)
        seeds = [r["seed"] for r in rep["runs"]]
        assert len(seeds) == 3
        assert len(set(seeds)) == 3
        again = experiment(cfg)
        assert [r["seed"] for r in again["runs"]] == seeds

    def test_level_ordering_with_ar_backend(self):
        # errors accumulate downward: the total is easiest, leaves hardest
        cfg = ExperimentConfig(runs=6, seed=2026, backends=("ar",))
        rep = experiment(cfg)
        s = rep["summary"]["ar"]
        assert s["top"]["quartiles"][1] < s["mid"]["quartiles"][1]
        assert s["mid"]["quartiles"][1] < s["bottom"]["quartiles"][1]

    def test_parallel_equals_serial(self):
        cfg = ExperimentConfig(
            runs=3, seed=11, backends=("naive",), steps=120, train_length=90, horizon=30
        )
        serial = experiment(cfg)
        parallel = experiment(dataclasses.replace(cfg, jobs=2))
        strip = lambda r: {k: v for k, v in r.items() if k != "config"}
        assert strip(serial) == strip(parallel)
        assert scores_csv(serial) == scores_csv(parallel)

    def test_failures_recorded_not_fatal(self, monkeypatch):
        import importlib

        ev = importlib.import_module("hierodds.evaluate")

        def boom(*args, **kwargs):
            raise DataError("synthetic failure")

        monkeypatch.setattr(ev, "run_forecast", boom)
        cfg = ExperimentConfig(
            runs=2, seed=3, backends=("naive",), steps=120, train_length=90, horizon=30
        )
        rep = experiment(cfg)
        assert rep["n_failed"] == 2
        for record in rep["runs"]:
            assert "synthetic failure" in record["error"]
        assert rep["summary"]["naive"]["top"]["n_scores"] == 0

    def test_multiple_backends_scored_per_run(self):
        cfg = ExperimentConfig(
            runs=1,
            seed=13,
            backends=("naive", "drift"),
            steps=120,
            train_length=90,
            horizon=30,
        )
        rep = experiment(cfg)
        assert set(rep["runs"][0]["scores"]) == {"naive", "drift"}
        assert set(rep["summary"]) == {"naive", "drift"}


class TestReportFiles:
    def make_report(self):
        cfg = ExperimentConfig(
            runs=2, seed=21, backends=("naive",), steps=120, train_length=90, horizon=30
        )
        return experiment(cfg)

    def test_json_is_stable(self):
        rep = self.make_report()
        assert report_json(rep) == report_json(self.make_report())

    def test_csv_shape(self):
        rep = self.make_report()
        lines = scores_csv(rep).splitlines()
        assert lines[0] == "backend,level,node,rmspe"
        body = [line.split(",") for line in lines[1:]]
        assert body
        for backend, level, node, value in body:
            assert backend == "naive"
            assert level in {"top", "mid", "bottom"}
            assert node.startswith("run")
            float(value)

    def test_csv_carries_every_score(self):
        rep = self.make_report()
        n_rows = len(scores_csv(rep).splitlines()) - 1
        n_scores = sum(
            len(run["scores"]["naive"]["levels"][level]["scores"])
            for run in rep["runs"]
            for level in ("top", "mid", "bottom")
        )
        assert n_rows == n_scores

    def test_write_report_files(self, tmp_path):
        rep = self.make_report()
        json_path, csv_path = write_report_files(rep, str(tmp_path / "out"))
        with open(json_path) as fh:
            assert fh.read() == report_json(rep)
        with open(csv_path) as fh:
            assert fh.read() == scores_csv(rep)
