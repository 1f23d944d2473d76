import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hierodds import (
    DataError,
    Hierarchy,
    LevelSeries,
    MidNode,
    SeriesFrame,
    StructureError,
    aggregate,
    validate,
)


def small_hier():
    return Hierarchy(
        mid_nodes=(
            MidNode(id="A", children=("x1", "x2")),
            MidNode(id="B", children=("x3",)),
        )
    )


class TestStructure:
    def test_ids_in_declaration_order(self):
        h = small_hier()
        assert h.mid_ids == ("A", "B")
        assert h.bottom_ids == ("x1", "x2", "x3")
        assert h.children("A") == ("x1", "x2")

    def test_unknown_mid_raises(self):
        with pytest.raises(StructureError, match="unknown mid"):
            small_hier().children("Z")

    def test_empty_children_rejected(self):
        with pytest.raises(StructureError, match="no children"):
            MidNode(id="A", children=())

    def test_duplicate_children_rejected(self):
        with pytest.raises(StructureError, match="duplicate"):
            MidNode(id="A", children=("x", "x"))

    def test_duplicate_mid_ids_rejected(self):
        with pytest.raises(StructureError, match="duplicate mid"):
            Hierarchy(mid_nodes=(MidNode("A", ("x",)), MidNode("A", ("y",))))

    def test_shared_bottom_rejected(self):
        with pytest.raises(StructureError, match="more than one mid"):
            Hierarchy(mid_nodes=(MidNode("A", ("x",)), MidNode("B", ("x",))))

    def test_mid_bottom_collision_rejected(self):
        with pytest.raises(StructureError, match="collides"):
            Hierarchy(mid_nodes=(MidNode("A", ("B",)), MidNode("B", ("y",))))

    def test_dict_round_trip(self):
        h = small_hier()
        assert Hierarchy.from_dict(h.to_dict()) == h

    def test_from_dict_tolerates_extra_keys(self):
        payload = small_hier().to_dict()
        payload["spec"] = {"anything": 1}
        assert Hierarchy.from_dict(payload) == small_hier()

    def test_from_dict_requires_mids(self):
        with pytest.raises(DataError, match="mids"):
            Hierarchy.from_dict({"nodes": []})

    def test_json_file_round_trip(self, tmp_path):
        path = tmp_path / "h.json"
        small_hier().to_json(path)
        assert Hierarchy.from_json(path) == small_hier()

    def test_missing_file_names_path(self, tmp_path):
        path = tmp_path / "nope.json"
        with pytest.raises(DataError, match="nope.json"):
            Hierarchy.from_json(path)


class TestSeriesFrame:
    def test_rejects_empty_and_ragged(self):
        with pytest.raises(StructureError):
            SeriesFrame({})
        with pytest.raises(StructureError, match="length"):
            SeriesFrame({"a": [1.0, 2.0], "b": [1.0]})

    def test_window_and_subset(self):
        f = SeriesFrame({"a": [1.0, 2, 3, 4], "b": [5.0, 6, 7, 8]})
        w = f.window(1, 3)
        assert w.length == 2
        assert np.array_equal(w.column("a"), [2.0, 3.0])
        s = f.subset(["b"])
        assert s.ids == ("b",)

    def test_window_bounds_checked(self):
        f = SeriesFrame({"a": [1.0, 2.0]})
        with pytest.raises(StructureError, match="window"):
            f.window(0, 5)

    def test_csv_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        f = SeriesFrame({"a": rng.integers(0, 50, 20).astype(float), "b": rng.random(20)})
        path = tmp_path / "s.csv"
        f.to_csv(path)
        g = SeriesFrame.from_csv(path)
        assert g.ids == f.ids
        for cid in f.ids:
            assert np.array_equal(g.column(cid), f.column(cid))

    def test_from_csv_requires_t_column(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="'t'"):
            SeriesFrame.from_csv(path)

    def test_from_csv_missing_file_names_path(self, tmp_path):
        with pytest.raises(DataError, match="missing.csv"):
            SeriesFrame.from_csv(tmp_path / "missing.csv")


class TestAggregate:
    def test_two_children_sum_by_hand(self):
        h = Hierarchy(mid_nodes=(MidNode("A", ("x1", "x2")),))
        frame = SeriesFrame({"x1": [1.0, 2.0], "x2": [3.0, 4.0]})
        levels = aggregate(h, frame)
        assert np.array_equal(levels.mid["A"], [4.0, 6.0])
        assert np.array_equal(levels.top, [4.0, 6.0])

    def test_single_child_identity(self):
        h = Hierarchy(mid_nodes=(MidNode("A", ("x1",)),))
        frame = SeriesFrame({"x1": [5.0, 0.0, 7.0]})
        levels = aggregate(h, frame)
        assert np.array_equal(levels.mid["A"], [5.0, 0.0, 7.0])
        assert np.array_equal(levels.top, [5.0, 0.0, 7.0])

    def test_missing_column_names_id(self):
        h = Hierarchy(mid_nodes=(MidNode("A", ("x1", "x9")),))
        with pytest.raises(StructureError, match="x9"):
            aggregate(h, SeriesFrame({"x1": [1.0]}))

    def test_top_matches_full_column_sum_oracle(self):
        # independent oracle: accumulate columns one by one in plain python
        rng = np.random.default_rng(3)
        counts = [3, 1, 4, 2, 5, 1]
        names = [f"x{i}" for i in range(sum(counts))]
        frame = SeriesFrame({n: rng.integers(0, 9, 40).astype(float) for n in names})
        nodes, pos = [], 0
        for i, c in enumerate(counts):
            nodes.append(MidNode(f"m{i}", tuple(names[pos : pos + c])))
            pos += c
        levels = aggregate(Hierarchy(tuple(nodes)), frame)
        expected = np.zeros(40)
        for n in names:
            expected = expected + frame.column(n)
        assert np.allclose(levels.top, expected, atol=1e-12)

    def test_aggregate_is_idempotent_in_effect(self):
        h = small_hier()
        frame = SeriesFrame({"x1": [1.0, 2], "x2": [3.0, 4], "x3": [5.0, 6]})
        a = aggregate(h, frame)
        b = aggregate(h, frame)
        assert np.array_equal(a.top, b.top)
        assert all(np.array_equal(a.mid[m], b.mid[m]) for m in a.mid)

    @given(perm=st.permutations(range(3)))
    @settings(max_examples=20, deadline=None)
    def test_mid_order_does_not_change_top(self, perm):
        rng = np.random.default_rng(11)
        cols = {f"x{i}": rng.random(12) * 100 for i in range(6)}
        frame = SeriesFrame(cols)
        base = [MidNode("A", ("x0", "x1")), MidNode("B", ("x2",)), MidNode("C", ("x3", "x4", "x5"))]
        h1 = Hierarchy(tuple(base))
        h2 = Hierarchy(tuple(base[i] for i in perm))
        t1 = aggregate(h1, frame).top
        t2 = aggregate(h2, frame).top
        assert np.allclose(t1, t2, atol=1e-12, rtol=0)


class TestValidate:
    def _levels(self):
        h = small_hier()
        frame = SeriesFrame({"x1": [1.0, 2, 3], "x2": [4.0, 5, 6], "x3": [7.0, 8, 9]})
        return h, aggregate(h, frame)

    def test_aggregate_output_is_consistent(self):
        h, levels = self._levels()
        assert validate(h, levels).ok

    def test_single_mid_perturbation_located_exactly(self):
        h, levels = self._levels()
        mid = dict(levels.mid)
        mid["A"] = mid["A"].copy()
        mid["A"][2] += 1.0
        broken = LevelSeries(top=levels.top, mid=mid, bottom=levels.bottom)
        report = validate(h, broken)
        # the change breaks both A's own identity and the top sum at t=2
        mid_violations = [v for v in report.violations if v.level == "mid"]
        assert len(mid_violations) == 1
        assert (mid_violations[0].node, mid_violations[0].t) == ("A", 2)

    def test_perturbations_at_both_levels_reported(self):
        h, levels = self._levels()
        top = levels.top.copy()
        top[0] += 2.0
        mid = dict(levels.mid)
        mid["B"] = mid["B"].copy()
        mid["B"][1] -= 1.0
        broken = LevelSeries(top=top, mid=mid, bottom=levels.bottom)
        report = validate(h, broken)
        assert not report.ok
        levels_seen = {v.level for v in report.violations}
        assert levels_seen == {"top", "mid"}
