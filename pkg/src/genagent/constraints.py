"""Internal constraint evaluation and spatial conflict detection."""
from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, NamedTuple

import numpy as np

from . import kernels
from .geometry import (
    ELIMINATED,
    MapObject,
    Parts,
    Polygon,
    Polyline,
    ScaleSpec,
    interior_angles,
    parts_bounds,
    to_parts,
)

DEFENSIVE_FLOOR = 0.5
#: corners deviating at most this much from orthogonal are candidates for squareness
SQUARENESS_WINDOW = 20.0
#: candidate corners within this many degrees of orthogonal count as square
SQUARENESS_TOLERANCE = 1.0


class ConstraintKind(str, enum.Enum):
    MIN_SIZE = "min_size"
    GRANULARITY = "granularity"
    SQUARENESS = "squareness"
    SHAPE_PRESERVATION = "shape_preservation"
    OVERLAP = "overlap"


OFFENSIVE = "offensive"
DEFENSIVE = "defensive"

ROLE = {
    ConstraintKind.MIN_SIZE: OFFENSIVE,
    ConstraintKind.GRANULARITY: OFFENSIVE,
    ConstraintKind.SQUARENESS: OFFENSIVE,
    ConstraintKind.SHAPE_PRESERVATION: DEFENSIVE,
    ConstraintKind.OVERLAP: OFFENSIVE,
}


class ConstraintEval(NamedTuple):
    kind: ConstraintKind
    satisfaction: float
    role: str

    @classmethod
    def of(cls, kind: ConstraintKind, satisfaction: float) -> ConstraintEval:
        return cls(kind, min(1.0, max(0.0, float(satisfaction))), ROLE[kind])


def squareness(poly: Polygon, tolerance: float = SQUARENESS_TOLERANCE) -> float:
    dev = np.abs(np.mod(interior_angles(poly), 180.0) - 90.0)
    candidates = dev <= SQUARENESS_WINDOW
    if not candidates.any():
        return 1.0
    return float(np.count_nonzero(dev[candidates] <= tolerance)) / float(np.count_nonzero(candidates))


def granularity(geom, min_side: float) -> float:
    if isinstance(geom, Polygon):
        lengths = geom.edge_lengths()
    else:
        d = np.diff(geom.coords, axis=0)
        lengths = np.hypot(d[:, 0], d[:, 1])
    return float(np.count_nonzero(lengths >= min_side)) / len(lengths)


def evaluate_internal(obj: MapObject, geom, spec: ScaleSpec, *, os: float | None = None,
                      elimination_penalty: float = 1.0) -> list[ConstraintEval]:
    """Evaluate the internal constraints of ``obj`` in state ``geom``.

    ``os`` is the shape loss against the original geometry; computed when
    omitted.
    """
    if geom is ELIMINATED:
        return []
    if os is None:
        from .fitness import shape_loss

        os = shape_loss(obj, obj.geometry, geom, spec, elimination_penalty=elimination_penalty)
    evals = []
    if isinstance(geom, Polygon):
        evals.append(ConstraintEval.of(ConstraintKind.MIN_SIZE, min(1.0, geom.area / spec.min_area)))
    evals.append(ConstraintEval.of(ConstraintKind.GRANULARITY, granularity(geom, spec.min_side)))
    if isinstance(geom, Polygon):
        evals.append(ConstraintEval.of(ConstraintKind.SQUARENESS, squareness(geom)))
    evals.append(ConstraintEval.of(ConstraintKind.SHAPE_PRESERVATION, max(0.0, 1.0 - os)))
    return evals


def defensive_violated(evals: Iterable[ConstraintEval], floor: float = DEFENSIVE_FLOOR) -> bool:
    return any(e.role == DEFENSIVE and e.satisfaction < floor for e in evals)


def offensive_satisfied(evals: Iterable[ConstraintEval]) -> bool:
    return all(e.satisfaction >= 1.0 for e in evals if e.role == OFFENSIVE)


# ----------------------------------------------------------------------
# symbolization
# ----------------------------------------------------------------------


def road_band(line: Polyline, half_width: float) -> Parts:
    """Flat-capped rectangle per segment, ``half_width`` either side."""
    a = line.coords[:-1]
    b = line.coords[1:]
    d = b - a
    n = np.stack((-d[:, 1], d[:, 0]), axis=1) / np.hypot(d[:, 0], d[:, 1])[:, None] * half_width
    quads = np.stack((a - n, b - n, b + n, a + n), axis=1)
    k = len(a)
    return Parts(
        np.ascontiguousarray(quads.reshape(-1, 2)),
        np.arange(0, 4 * k + 1, 4, dtype=np.int64),
        np.ones(k, dtype=bool),
    )


def symbolize(geom, spec: ScaleSpec) -> Parts:
    if isinstance(geom, Polyline):
        return road_band(geom, spec.separation)
    return to_parts(geom)


def symbol_distance(a: Parts, b: Parts) -> float:
    return float(kernels.parts_distance(a.coords, a.offsets, a.closed, b.coords, b.offsets, b.closed))


# ----------------------------------------------------------------------
# conflict graph
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConflictGraph:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def __post_init__(self):
        adj: dict[str, set[str]] = {n: set() for n in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "_adj", {k: frozenset(v) for k, v in adj.items()})

    def neighbors(self, node: str) -> frozenset[str]:
        return self._adj[node]

    def degree(self, node: str) -> int:
        return len(self._adj[node])

    @property
    def in_conflict(self) -> frozenset[str]:
        return frozenset(n for n, v in self._adj.items() if v)

    @property
    def nc(self) -> int:
        """Number of objects in conflict (nodes with degree >= 1)."""
        return sum(1 for v in self._adj.values() if v)


def _edge(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


class GridIndex:
    """Uniform grid over part bounding boxes, each grown by ``margin``."""

    def __init__(self, cell: float, margin: float):
        self.cell = cell
        self.margin = margin
        self.cells: dict[tuple[int, int], list[int]] = defaultdict(list)

    def insert(self, item: int, parts: Parts) -> None:
        seen = set()
        m = self.margin
        c = self.cell
        for p in range(len(parts.offsets) - 1):
            seg = parts.coords[parts.offsets[p]:parts.offsets[p + 1]]
            x0, y0 = seg.min(axis=0)
            x1, y1 = seg.max(axis=0)
            for i in range(math.floor((x0 - m) / c), math.floor((x1 + m) / c) + 1):
                for j in range(math.floor((y0 - m) / c), math.floor((y1 + m) / c) + 1):
                    if (i, j) not in seen:
                        seen.add((i, j))
                        self.cells[(i, j)].append(item)

    def candidate_pairs(self) -> set[tuple[int, int]]:
        pairs = set()
        for items in self.cells.values():
            if len(items) > 1:
                for i, j in combinations(sorted(items), 2):
                    pairs.add((i, j))
        return pairs


def build_conflict_graph(objects: list[tuple[str, object]], spec: ScaleSpec) -> ConflictGraph:
    """Conflict graph of symbolized geometries closer than the separation threshold.

    Candidate pairs come from a uniform grid (cell = 4x threshold); each
    candidate is then tested exactly.
    """
    live = [(oid, g) for oid, g in objects if g is not ELIMINATED]
    sep = spec.separation
    syms = [symbolize(g, spec) for _, g in live]
    boxes = [parts_bounds(s) for s in syms]
    index = GridIndex(4.0 * sep, sep)
    for i, s in enumerate(syms):
        index.insert(i, s)
    edges = set()
    for i, j in index.candidate_pairs():
        if _box_gap(boxes[i], boxes[j]) >= sep:
            continue
        if symbol_distance(syms[i], syms[j]) < sep:
            edges.add(_edge(live[i][0], live[j][0]))
    return ConflictGraph(tuple(oid for oid, _ in live), frozenset(edges))


def brute_force_conflicts(objects: list[tuple[str, object]], spec: ScaleSpec) -> ConflictGraph:
    """All-pairs reference for :func:`build_conflict_graph`."""
    live = [(oid, g) for oid, g in objects if g is not ELIMINATED]
    sep = spec.separation
    syms = [symbolize(g, spec) for _, g in live]
    edges = set()
    for i, j in combinations(range(len(live)), 2):
        if symbol_distance(syms[i], syms[j]) < sep:
            edges.add(_edge(live[i][0], live[j][0]))
    return ConflictGraph(tuple(oid for oid, _ in live), frozenset(edges))


def _box_gap(a, b) -> float:
    gx = max(0.0, max(a[0], b[0]) - min(a[2], b[2]))
    gy = max(0.0, max(a[1], b[1]) - min(a[3], b[3]))
    return math.hypot(gx, gy)
