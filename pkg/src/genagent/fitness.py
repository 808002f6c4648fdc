"""Plan fitness: shape loss, displacement, objects in conflict.

The general function is ``f = nc + dp + os``. Each term is dimensionless:
``os`` is a relative area change (buildings) or an areal displacement
normalized by original length times the separation threshold (roads),
``dp`` is the displacement distance in units of the separation threshold
and ``nc`` counts objects in conflict. A plan that breaks a defensive
constraint gets ``f = inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .constraints import (
    DEFENSIVE_FLOOR,
    ConstraintEval,
    ConstraintKind,
    build_conflict_graph,
    defensive_violated,
    evaluate_internal,
    symbol_distance,
    symbolize,
    _box_gap,
)
from .errors import DegenerateGeometry
from .geometry import ELIMINATED, MapObject, Polygon, Polyline, ScaleSpec, areal_displacement, parts_bounds
from .operators import PlanOutcome

ELIMINATION_PENALTY = 1.0


@dataclass(frozen=True)
class FitnessComponents:
    os: float
    nc: int
    dp: float
    f: float
    defensive_penalty: bool = False

    @classmethod
    def combine(cls, os: float, nc: int, dp: float, defensive: bool) -> FitnessComponents:
        f = math.inf if defensive else nc + dp + os
        return cls(os=os, nc=nc, dp=dp, f=f, defensive_penalty=defensive)

    def to_dict(self) -> dict:
        return {"os": self.os, "nc": self.nc, "dp": self.dp,
                "f": None if math.isinf(self.f) else self.f,
                "defensive_penalty": self.defensive_penalty}


class DisplacementRecord(NamedTuple):
    dx: float
    dy: float


def shape_loss(obj: MapObject, original, result, spec: ScaleSpec, *,
               elimination_penalty: float = ELIMINATION_PENALTY) -> float:
    if result is ELIMINATED:
        return elimination_penalty
    if obj.kind == "building":
        s0 = original.area
        if s0 <= 0:
            raise DegenerateGeometry("original building has zero area")
        if result is original:
            return 0.0
        return float(abs(result.area - s0) / s0)
    l0 = original.length
    if l0 <= 0:
        raise DegenerateGeometry("original road has zero length")
    if result is original:
        return 0.0
    return float(areal_displacement(original, result) / (l0 * spec.separation))


def displacement_term(records: Iterable[DisplacementRecord], sep: float) -> float:
    if not sep > 0:
        raise ValueError("sep must be positive")
    return sum(math.hypot(dx, dy) for dx, dy in records) / sep


def _as_outcome(candidate) -> PlanOutcome:
    if isinstance(candidate, PlanOutcome):
        return candidate
    return PlanOutcome(candidate, candidate, 0.0, 0.0, (), ())


def _defensive(os: float, floor: float) -> bool:
    sat = ConstraintEval.of(ConstraintKind.SHAPE_PRESERVATION, max(0.0, 1.0 - os))
    return defensive_violated([sat], floor)


def general_fitness(obj: MapObject, candidate, neighbor_snapshot: list[tuple[str, object]],
                    spec: ScaleSpec, *, defensive_floor: float = DEFENSIVE_FLOOR,
                    elimination_penalty: float = ELIMINATION_PENALTY) -> FitnessComponents:
    """Evaluate one candidate state of ``obj`` against its neighbors.

    ``candidate`` is a :class:`PlanOutcome` or a bare geometry (taken as
    undisplaced).
    """
    out = _as_outcome(candidate)
    os = shape_loss(obj, obj.geometry, out.shaped, spec, elimination_penalty=elimination_penalty)
    if out.geometry is ELIMINATED:
        dp = 0.0
        defensive = False
    else:
        dp = displacement_term([DisplacementRecord(out.dx, out.dy)], spec.separation)
        evals = evaluate_internal(obj, out.geometry, spec, os=os)
        defensive = defensive_violated(evals, defensive_floor)
    graph = build_conflict_graph([(obj.id, out.geometry)] + list(neighbor_snapshot), spec)
    return FitnessComponents.combine(os, graph.nc, dp, defensive)


class FitnessContext:
    """Repeated evaluation of one agent's candidates against a fixed snapshot.

    Neighbor symbols and neighbor-neighbor conflicts are computed once;
    results match :func:`general_fitness` exactly.
    """

    def __init__(self, obj: MapObject, neighbor_snapshot: list[tuple[str, object]], spec: ScaleSpec, *,
                 defensive_floor: float = DEFENSIVE_FLOOR, elimination_penalty: float = ELIMINATION_PENALTY):
        self.obj = obj
        self.spec = spec
        self.defensive_floor = defensive_floor
        self.elimination_penalty = elimination_penalty
        live = [(i, g) for i, g in neighbor_snapshot if g is not ELIMINATED]
        self.neighbor_ids = [i for i, _ in live]
        self.neighbor_syms = [symbolize(g, spec) for _, g in live]
        self.neighbor_boxes = [parts_bounds(s) for s in self.neighbor_syms]
        base = build_conflict_graph(live, spec)
        self.base_conflicted = base.in_conflict

    def evaluate(self, outcome: PlanOutcome) -> FitnessComponents:
        spec = self.spec
        os = shape_loss(self.obj, self.obj.geometry, outcome.shaped, spec,
                        elimination_penalty=self.elimination_penalty)
        if outcome.geometry is ELIMINATED:
            return FitnessComponents.combine(os, len(self.base_conflicted), 0.0, False)
        dp = math.hypot(outcome.dx, outcome.dy) / spec.separation
        defensive = _defensive(os, self.defensive_floor)
        sym = symbolize(outcome.geometry, spec)
        box = parts_bounds(sym)
        sep = spec.separation
        hit = set()
        for nid, nsym, nbox in zip(self.neighbor_ids, self.neighbor_syms, self.neighbor_boxes):
            if _box_gap(box, nbox) < sep and symbol_distance(sym, nsym) < sep:
                hit.add(nid)
        nc = len(self.base_conflicted | hit) + (1 if hit else 0)
        return FitnessComponents.combine(os, nc, dp, defensive)
