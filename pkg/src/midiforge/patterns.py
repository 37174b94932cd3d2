"""Translational pattern discovery on (onset, pitch) point sets.

siatec finds, for every difference vector between two points, the
maximal translatable pattern and its translators. cosiatec greedily
picks TECs until every point is covered; the size of that cover
measures how repetitive a piece is.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from midiforge.errors import EmptyInput
from midiforge.models import NoteList
from midiforge.remi import to_grid

Point = tuple[int, int]
PointSet = tuple[Point, ...]


def to_point_set(notes: NoteList, ticks_per_quarter: int, resolution: int = 8) -> PointSet:
    """One (onset grid index, pitch) point per pitched note, deduplicated and sorted."""
    return tuple(sorted({
        (to_grid(n.onset, ticks_per_quarter, resolution), n.pitch) for n in notes if not n.is_drum
    }))


def _add(p: Point, v: Point) -> Point:
    return (p[0] + v[0], p[1] + v[1])


def _sub(p: Point, q: Point) -> Point:
    return (p[0] - q[0], p[1] - q[1])


@dataclass(frozen=True)
class TEC:
    """Translational equivalence class: a pattern and every vector mapping it into the set."""
    pattern: PointSet
    translators: tuple[Point, ...]

    @cached_property
    def covered(self) -> frozenset[Point]:
        return frozenset(_add(p, t) for p in self.pattern for t in self.translators)

    @property
    def coverage(self) -> int:
        return len(self.covered)

    @property
    def encoded_size(self) -> int:
        return len(self.pattern) + len(self.translators) - 1

    @property
    def compression_ratio(self) -> float:
        return self.coverage / self.encoded_size

    @property
    def bbox_area(self) -> int:
        onsets = [p[0] for p in self.pattern]
        pitches = [p[1] for p in self.pattern]
        return (max(onsets) - min(onsets) + 1) * (max(pitches) - min(pitches) + 1)

    def selection_key(self) -> tuple:
        """Smaller is better: ratio, then coverage, then compactness, then pattern order."""
        return (-self.compression_ratio, -self.coverage, self.bbox_area, self.pattern)


def translators(pattern: PointSet, points: frozenset[Point] | set[Point]) -> tuple[Point, ...]:
    """All vectors t with pattern + t inside points, zero vector included, sorted."""
    anchor = pattern[0]
    found = []
    for p in points:
        t = _sub(p, anchor)
        if all(_add(q, t) in points for q in pattern):
            found.append(t)
    return tuple(sorted(found))


def _vector_table(points: PointSet) -> dict[Point, list[Point]]:
    """Difference vector -> its maximal translatable pattern, points in sorted order."""
    pts = sorted(set(points))
    table: dict[Point, list[Point]] = {}
    for i, p in enumerate(pts):
        for q in pts[i + 1:]:
            table.setdefault(_sub(q, p), []).append(p)
    return table


def _restrict(table: dict[Point, list[Point]], remaining: set[Point]) -> dict[Point, list[Point]]:
    """The vector table of a subset, derived from the table of its superset."""
    out: dict[Point, list[Point]] = {}
    for v, mtp in table.items():
        kept = [p for p in mtp if p in remaining and _add(p, v) in remaining]
        if kept:
            out[v] = kept
    return out


def _table_translators(
    pattern: PointSet, table: dict[Point, list[Point]], points: frozenset[Point]
) -> tuple[Point, ...]:
    # q + (p - anchor) lies in the set for every p exactly when q is in each of those MTPs.
    anchor = pattern[0]
    if len(pattern) == 1:
        candidates: Iterable[Point] = points
    else:
        columns = sorted((table[_sub(p, anchor)] for p in pattern[1:]), key=len)
        candidates = set(columns[0]).intersection(*columns[1:])
    return tuple(sorted(_sub(q, anchor) for q in candidates))


def _max_translators(pattern: PointSet, table: dict[Point, list[Point]], points: frozenset[Point]) -> int:
    if len(pattern) == 1:
        return len(points)
    anchor = pattern[0]
    return min(len(table[_sub(p, anchor)]) for p in pattern[1:])


def _ratio_bound(m: int, k: int) -> float:
    return m * k / (m + k - 1)


def siatec(points: PointSet) -> list[TEC]:
    """One TEC per distinct maximal translatable pattern, sorted by pattern."""
    point_set = frozenset(points)
    table = _vector_table(points)
    patterns = sorted({tuple(mtp) for mtp in table.values()})
    return [TEC(pattern, _table_translators(pattern, table, point_set)) for pattern in patterns]


def _best_tec(table: dict[Point, list[Point]], points: frozenset[Point]) -> TEC:
    """min(siatec(points), key=TEC.selection_key), skipping TECs that cannot win."""
    patterns = {tuple(mtp) for mtp in table.values()}
    candidates = sorted(
        ((_ratio_bound(len(p), _max_translators(p, table, points)), p) for p in patterns),
        key=lambda c: -c[0],
    )
    best: TEC | None = None
    for bound, pattern in candidates:
        # Coverage never exceeds pattern size times translator count.
        if best is not None and bound < best.compression_ratio:
            break
        tec = TEC(pattern, _table_translators(pattern, table, points))
        if best is None or tec.selection_key() < best.selection_key():
            best = tec
    assert best is not None
    return best


def cosiatec(points: PointSet) -> list[TEC]:
    """Greedy cover: pick the best TEC over the remaining points until none remain.

    The difference-vector table is built once and shrunk as points are
    covered; each round is siatec over the points still uncovered.
    """
    remaining = set(points)
    table = _vector_table(tuple(remaining))
    cover: list[TEC] = []
    while remaining:
        if len(remaining) == 1:
            cover.append(TEC((next(iter(remaining)),), ((0, 0),)))
            break
        best = _best_tec(table, frozenset(remaining))
        cover.append(best)
        remaining -= best.covered
        table = _restrict(table, remaining)
    return cover


def compression_ratio(points: PointSet) -> float:
    """|P| over the summed encoded size of the cosiatec cover."""
    if not points:
        raise EmptyInput("compression ratio needs at least one point")
    cover = cosiatec(points)
    return len(set(points)) / sum(tec.encoded_size for tec in cover)
