"""Three-level hierarchy structure and level-consistent series containers.

A hierarchy has one implicit root ("TOP"), an ordered list of mid nodes, and
bottom-level series owned by exactly one mid node each. Values live in a
:class:`SeriesFrame` (bottom level) and a :class:`LevelSeries` (all levels);
:func:`aggregate` builds the upper levels by summation and :func:`validate`
checks the summation identities.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DataError, StructureError

TOP_ID = "TOP"

LEVEL_TOP = "top"
LEVEL_MID = "mid"
LEVEL_BOTTOM = "bottom"


@dataclass(frozen=True)
class MidNode:
    """A mid-level node: an id plus the ordered ids of its bottom children."""

    id: str
    children: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise StructureError(f"mid node {self.id!r} has no children")
        if len(set(self.children)) != len(self.children):
            raise StructureError(f"mid node {self.id!r} has duplicate children")


@dataclass(frozen=True)
class Hierarchy:
    """An ordered collection of mid nodes under a single implicit root.

    Every bottom id must appear under exactly one mid node.
    """

    mid_nodes: tuple[MidNode, ...]

    def __post_init__(self):
        object.__setattr__(self, "mid_nodes", tuple(self.mid_nodes))
        if not self.mid_nodes:
            raise StructureError("hierarchy needs at least one mid node")
        mid_ids = [m.id for m in self.mid_nodes]
        if len(set(mid_ids)) != len(mid_ids):
            raise StructureError("duplicate mid node ids")
        seen: set[str] = set()
        for node in self.mid_nodes:
            overlap = seen.intersection(node.children)
            if overlap:
                raise StructureError(
                    f"bottom id(s) {sorted(overlap)} appear under more than one mid node"
                )
            seen.update(node.children)
        if seen.intersection(mid_ids):
            raise StructureError("a bottom id collides with a mid node id")

    @property
    def mid_ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.mid_nodes)

    @property
    def bottom_ids(self) -> tuple[str, ...]:
        return tuple(child for m in self.mid_nodes for child in m.children)

    def children(self, mid_id: str) -> tuple[str, ...]:
        for node in self.mid_nodes:
            if node.id == mid_id:
                return node.children
        raise StructureError(f"unknown mid node id {mid_id!r}")

    def to_dict(self) -> dict:
        return {"mids": [{"id": m.id, "children": list(m.children)} for m in self.mid_nodes]}

    @classmethod
    def from_dict(cls, payload: dict) -> Hierarchy:
        try:
            mids = payload["mids"]
        except (KeyError, TypeError):
            raise DataError("hierarchy JSON must contain a 'mids' list") from None
        nodes = []
        for entry in mids:
            try:
                nodes.append(MidNode(id=str(entry["id"]), children=tuple(entry["children"])))
            except (KeyError, TypeError):
                raise DataError(f"malformed mid node entry: {entry!r}") from None
        return cls(mid_nodes=tuple(nodes))

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_json(cls, path: str | Path) -> Hierarchy:
        path = Path(path)
        if not path.exists():
            raise DataError(f"hierarchy file not found: {path}")
        try:
            payload = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"hierarchy file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(payload)


class SeriesFrame:
    """Aligned time-indexed columns, one per bottom series.

    Timestamps are the implicit integer index 0..T-1. Column values are stored
    as float64 even for count data so that forecasts and reconciled values can
    share the representation.
    """

    def __init__(self, columns: dict[str, np.ndarray]):
        if not columns:
            raise StructureError("series frame needs at least one column")
        converted: dict[str, np.ndarray] = {}
        length = None
        for cid, values in columns.items():
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 1:
                raise StructureError(f"column {cid!r} is not one-dimensional")
            if length is None:
                length = arr.size
            elif arr.size != length:
                raise StructureError(
                    f"column {cid!r} has length {arr.size}, expected {length}"
                )
            converted[str(cid)] = arr
        if length == 0:
            raise StructureError("series frame has zero rows")
        self._columns = converted
        self._length = int(length)

    @property
    def length(self) -> int:
        return self._length

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(self._columns)

    @property
    def timestamps(self) -> np.ndarray:
        return np.arange(self._length)

    def column(self, series_id: str) -> np.ndarray:
        try:
            return self._columns[series_id]
        except KeyError:
            raise StructureError(f"series frame has no column {series_id!r}") from None

    def __contains__(self, series_id: str) -> bool:
        return series_id in self._columns

    def subset(self, ids) -> SeriesFrame:
        return SeriesFrame({cid: self.column(cid) for cid in ids})

    def window(self, start: int, stop: int) -> SeriesFrame:
        if not (0 <= start < stop <= self._length):
            raise StructureError(f"window [{start}, {stop}) outside frame of length {self._length}")
        return SeriesFrame({cid: col[start:stop] for cid, col in self._columns.items()})

    def to_csv(self, path: str | Path) -> None:
        # repr round-trips float64 exactly; pandas default formatting does not
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", *self._columns])
            cols = list(self._columns.values())
            for t in range(self._length):
                writer.writerow([t, *(repr(float(c[t])) for c in cols)])

    @classmethod
    def from_csv(cls, path: str | Path) -> SeriesFrame:
        path = Path(path)
        if not path.exists():
            raise DataError(f"series file not found: {path}")
        df = pd.read_csv(path, float_precision="round_trip")
        if "t" not in df.columns:
            raise DataError(f"series file {path} lacks the leading 't' column")
        ids = [c for c in df.columns if c != "t"]
        if not ids:
            raise DataError(f"series file {path} has no series columns")
        return cls({cid: df[cid].to_numpy(dtype=float) for cid in ids})


@dataclass
class LevelSeries:
    """Value vectors at every level: top, per-mid, and the bottom frame.

    The container itself does not enforce the summation identities; use
    :func:`validate` to check them (outputs of :func:`aggregate` satisfy them
    by construction).
    """

    top: np.ndarray
    mid: dict[str, np.ndarray]
    bottom: SeriesFrame

    @property
    def length(self) -> int:
        return int(self.top.size)

    def window(self, start: int, stop: int) -> LevelSeries:
        return LevelSeries(
            top=self.top[start:stop],
            mid={mid_id: vec[start:stop] for mid_id, vec in self.mid.items()},
            bottom=self.bottom.window(start, stop),
        )


@dataclass(frozen=True)
class SumViolation:
    """One broken summation identity at (level, node, t)."""

    level: str
    node: str
    t: int
    expected: float
    actual: float


@dataclass
class ValidationReport:
    violations: list[SumViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def aggregate(hierarchy: Hierarchy, bottom: SeriesFrame) -> LevelSeries:
    """Sum bottom columns into mid series and the mid series into the top.

    Sums run in hierarchy order so repeated aggregation is bit-identical.
    Raises StructureError if a child column is missing from ``bottom``.
    """
    for child in hierarchy.bottom_ids:
        if child not in bottom:
            raise StructureError(f"bottom frame is missing column {child!r}")
    mid: dict[str, np.ndarray] = {}
    for node in hierarchy.mid_nodes:
        stacked = np.stack([bottom.column(c) for c in node.children])
        mid[node.id] = stacked.sum(axis=0)
    top = np.stack([mid[m.id] for m in hierarchy.mid_nodes]).sum(axis=0)
    return LevelSeries(top=top, mid=mid, bottom=bottom)


def validate(hierarchy: Hierarchy, levels: LevelSeries, tol: float = 1e-9) -> ValidationReport:
    """Report every (level, node, t) whose summation identity breaks ``tol``.

    Expected values at both levels are recomputed from the bottom frame, so a
    perturbation of one stored series yields exactly one violation per broken
    (node, t). An empty report means the levels are consistent; inconsistency
    is reported, never raised.
    """
    report = ValidationReport()
    mid_sums: dict[str, np.ndarray] = {}
    for node in hierarchy.mid_nodes:
        stacked = np.stack([levels.bottom.column(c) for c in node.children])
        mid_sums[node.id] = stacked.sum(axis=0)
    for node in hierarchy.mid_nodes:
        stored = levels.mid[node.id]
        expected = mid_sums[node.id]
        for t in np.flatnonzero(np.abs(stored - expected) > tol):
            report.violations.append(
                SumViolation(LEVEL_MID, node.id, int(t), float(expected[t]), float(stored[t]))
            )
    top_expected = np.stack([mid_sums[m.id] for m in hierarchy.mid_nodes]).sum(axis=0)
    for t in np.flatnonzero(np.abs(levels.top - top_expected) > tol):
        report.violations.append(
            SumViolation(LEVEL_TOP, TOP_ID, int(t), float(top_expected[t]), float(levels.top[t]))
        )
    return report
