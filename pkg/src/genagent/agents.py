"""Agent runtime: synchronous rounds with a commit barrier.

Each round the coordinator builds the conflict graph on the committed
geometries, hands every agent an immutable snapshot of its conflict
neighbors, runs the GA of every active agent against that snapshot (all
agents see the previous commit, never a partial one) and commits all new
plans at once.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .constraints import (
    DEFENSIVE_FLOOR,
    OFFENSIVE,
    ConflictGraph,
    ConstraintEval,
    build_conflict_graph,
    evaluate_internal,
    symbol_distance,
    symbolize,
)
from .errors import EmptyScene
from .fitness import ELIMINATION_PENALTY, FitnessComponents, general_fitness
from .genome import AgentContext, Chromosome, GaConfig, Gene, run_ga, zero_chromosome
from .geometry import ELIMINATED, MapObject, ScaleSpec, parts_bounds
from .operators import KIND_OPERATORS, KIND_PARAMS, Bounds, OperatorKind, PlanOutcome, apply_plan, identity_params

log = logging.getLogger(__name__)

#: Minimum per-agent GA budget within a round.
MIN_AGENT_BUDGET_MS = 50.0


@dataclass(frozen=True)
class SessionConfig:
    max_rounds: int = 10
    deadline_ms: float = 10_000.0
    workers: int = 1
    #: rounds without f_sum improvement before displacement bounds are halved
    stall_rounds: int = 2
    #: run only an independent set of the conflicting agents per round
    exclusive_neighbors: bool = True
    #: seed each GA with displacement proposals derived from its conflicts
    propose: bool = True
    #: widen snapshots to objects within the displacement reach; False keeps conflict neighbors only
    snapshot_reach: bool = True

    def __post_init__(self):
        if self.max_rounds < 0:
            raise ValueError("max_rounds must be >= 0")
        if self.deadline_ms < 0:
            raise ValueError("deadline_ms must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class AgentState:
    object: MapObject
    original_geometry: object
    committed_geometry: object
    best_plan: Chromosome
    outcome: PlanOutcome
    constraint_evals: list[ConstraintEval] = field(default_factory=list)
    neighbor_ids: frozenset[str] = frozenset()

    @property
    def id(self) -> str:
        return self.object.id

    @classmethod
    def initial(cls, obj: MapObject, bounds: Bounds) -> AgentState:
        plan = zero_chromosome(obj.id, obj.kind)
        out = apply_plan(obj, plan, bounds)
        return cls(obj, obj.geometry, out.geometry, plan, out)

    def commit(self, plan: Chromosome, bounds: Bounds) -> None:
        out = apply_plan(self.object, plan, bounds)
        self.best_plan = plan
        self.outcome = out
        self.committed_geometry = out.geometry


@dataclass(frozen=True)
class RoundReport:
    round_index: int
    global_nc: int
    global_f_sum: float
    elapsed_ms: float
    per_agent: tuple[tuple[str, FitnessComponents], ...]
    active: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "round_index": self.round_index,
            "global_nc": self.global_nc,
            "global_f_sum": self.global_f_sum,
            "elapsed_ms": self.elapsed_ms,
            "active": list(self.active),
            "per_agent": [{"id": i, **c.to_dict()} for i, c in self.per_agent],
        }


@dataclass
class SessionResult:
    geometries: dict[str, object]
    plans: dict[str, Chromosome]
    outcomes: dict[str, PlanOutcome]
    reports: list[RoundReport]
    final_nc: int
    final_f_sum: float
    elapsed_ms: float

    @property
    def rounds(self) -> int:
        return len(self.reports)


def snapshot_exchange(graph: ConflictGraph, committed: Mapping[str, object], *,
                      reach: float | None = None, spec: ScaleSpec | None = None,
                      ) -> dict[str, tuple[tuple[str, object], ...]]:
    """Each agent's immutable view of its neighbors' committed geometry.

    Neighbors are the agent's conflict-graph neighbors. With ``reach`` set,
    every object whose symbol bounding box lies within ``reach`` of the
    agent's is added, so the agent also sees what it could run into.
    """
    near: dict[str, set[str]] = {node: set(graph.neighbors(node)) for node in graph.nodes}
    if reach is not None:
        if spec is None:
            raise ValueError("spec is required with reach")
        nodes = list(graph.nodes)
        boxes = np.array([parts_bounds(symbolize(committed[n], spec)) for n in nodes]).reshape(-1, 4)
        for i, node in enumerate(nodes):
            gx = np.maximum(0.0, np.maximum(boxes[:, 0], boxes[i, 0]) - np.minimum(boxes[:, 2], boxes[i, 2]))
            gy = np.maximum(0.0, np.maximum(boxes[:, 1], boxes[i, 1]) - np.minimum(boxes[:, 3], boxes[i, 3]))
            close = np.flatnonzero(np.hypot(gx, gy) < reach)
            near[node].update(nodes[j] for j in close if j != i)
    return {node: tuple((nid, committed[nid]) for nid in sorted(ids)) for node, ids in near.items()}


def select_active(graph: ConflictGraph, evals: Mapping[str, list[ConstraintEval]]) -> set[str]:
    active = set(graph.in_conflict)
    for oid, ev in evals.items():
        if any(e.role == OFFENSIVE and e.satisfaction < 1.0 for e in ev):
            active.add(oid)
    return active


def schedule(active: set[str] | list[str], graph: ConflictGraph, priority: Mapping[str, tuple]) -> list[str]:
    """Greedy independent set of ``active``.

    Candidates are taken buildings first, then by ascending conflict degree,
    then by ``priority``. No two scheduled agents are conflict neighbors, so
    every scheduled agent's snapshot stays exact for the round.
    """
    def rank(oid: str) -> tuple:
        p = priority[oid]
        return (p[0], graph.degree(oid) if oid in graph.nodes else 0) + tuple(p[1:])

    chosen: list[str] = []
    taken: set[str] = set()
    for oid in sorted(active, key=rank):
        if taken.isdisjoint(graph.neighbors(oid)):
            chosen.append(oid)
            taken.add(oid)
    return sorted(chosen, key=priority.__getitem__)


_DIRECTIONS = tuple((math.cos(a), math.sin(a)) for a in np.arange(8) * (math.pi / 4))


def propose_plans(ctx: AgentContext, limit: int = 4) -> list[Chromosome]:
    """Displacement plans that clear the agent of every conflict in its snapshot.

    Along each of eight compass directions the first clearing position
    within the displacement bound is found by marching in half-separation
    steps and refined by bisection; the ``limit`` shortest are returned as
    displace-only plans.
    """
    obj = ctx.obj
    if not ctx.neighbors:
        return []
    spec = ctx.spec
    sep = spec.separation
    neighbor_syms = [symbolize(g, spec) for _, g in ctx.neighbors if g is not ELIMINATED]
    base = symbolize(obj.geometry, spec)

    def clear(dx: float, dy: float) -> bool:
        moved = base._replace(coords=base.coords + (dx, dy))
        return all(symbol_distance(moved, n) >= sep for n in neighbor_syms)

    reach = ctx.bounds.disp_max
    step = 0.5 * sep
    found = []
    for ux, uy in _DIRECTIONS:
        # march outward to the first clear position, then tighten by bisection
        lo = 0.0
        hi = None
        t = step
        while t <= reach + 1e-12:
            if clear(ux * t, uy * t):
                hi = t
                break
            lo = t
            t += step
        if hi is None:
            continue
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            if clear(ux * mid, uy * mid):
                hi = mid
            else:
                lo = mid
        found.append((hi, ux * hi, uy * hi))
    found.sort()
    ident = identity_params(obj.kind)
    names = KIND_PARAMS[obj.kind]
    plans = []
    for _, dx, dy in found[:limit]:
        params = ident.copy()
        params[names.index("displace_dx")] = dx
        params[names.index("displace_dy")] = dy
        flags = np.array([op is OperatorKind.DISPLACE for op in KIND_OPERATORS[obj.kind]], dtype=np.uint8)
        plans.append(Chromosome(Gene(obj.id, obj.kind, flags, params)))
    return plans


def _agent_seed(seed: int, round_index: int, agent_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, round_index, agent_index]))


def run_session(objects: list[MapObject], spec: ScaleSpec, cfg: GaConfig = GaConfig(),
                session_cfg: SessionConfig = SessionConfig(), *, bounds: Bounds | None = None,
                defensive_floor: float = DEFENSIVE_FLOOR, elimination_penalty: float = ELIMINATION_PENALTY,
                on_report: Callable[[RoundReport], None] | None = None) -> SessionResult:
    """Generalize ``objects`` to ``spec``'s target scale.

    Rounds repeat until no object is in conflict and every offensive
    constraint is satisfied, until ``session_cfg.max_rounds`` optimizing
    rounds have run, or until the deadline passes. Every round opens with a
    report on the current commit, so a run that stops on a limit ends with
    a report describing the final state. The returned geometries are the
    best commit seen, ranked by (objects in conflict, summed f).
    """
    if not objects:
        raise EmptyScene("no objects to generalize")
    t0 = time.perf_counter()
    deadline = session_cfg.deadline_ms
    bounds = bounds or Bounds.for_scale(spec)
    order = {o.id: i for i, o in enumerate(objects)}
    # buildings yield before roads, smaller buildings before larger ones
    priority = {
        o.id: (o.kind == "road", o.geometry.area if o.kind == "building" else o.geometry.length, order[o.id])
        for o in objects
    }
    states = {o.id: AgentState.initial(o, bounds) for o in objects}
    reports: list[RoundReport] = []
    best_key = None
    best_commit = None
    stall = 0
    pool = ThreadPoolExecutor(session_cfg.workers) if session_cfg.workers > 1 else None

    def elapsed_ms() -> float:
        return (time.perf_counter() - t0) * 1000.0

    try:
        for r in range(session_cfg.max_rounds + 1):
            committed = {oid: s.committed_geometry for oid, s in states.items()}
            graph = build_conflict_graph([(oid, committed[oid]) for oid in committed], spec)
            snapshots = snapshot_exchange(graph, committed)
            evals = {}
            per_agent = []
            for oid, s in states.items():
                s.neighbor_ids = graph.neighbors(oid) if oid in snapshots else frozenset()
                fit = general_fitness(s.object, s.outcome, list(snapshots.get(oid, ())), spec,
                                      defensive_floor=defensive_floor, elimination_penalty=elimination_penalty)
                per_agent.append((oid, fit))
                if s.committed_geometry is not ELIMINATED:
                    s.constraint_evals = evaluate_internal(s.object, s.committed_geometry, spec, os=fit.os)
                    evals[oid] = s.constraint_evals
                else:
                    s.constraint_evals = []
            f_sum = float(sum(c.f for _, c in per_agent))
            active = sorted(select_active(graph, evals), key=order.__getitem__)
            report = RoundReport(r, graph.nc, f_sum, elapsed_ms(), tuple(per_agent), tuple(active))
            reports.append(report)
            if on_report is not None:
                on_report(report)
            log.debug("round %d nc=%d f_sum=%.6g active=%d", r, graph.nc, f_sum, len(active))

            key = (graph.nc, f_sum)
            if best_key is None or key < best_key:
                best_key = key
                best_commit = {oid: (s.best_plan, s.outcome) for oid, s in states.items()}
            if len(reports) > 1:
                stall = stall + 1 if f_sum >= reports[-2].global_f_sum else 0
                if stall >= session_cfg.stall_rounds:
                    bounds = replace(bounds, disp_max=bounds.disp_max / 2.0)
                    log.debug("f_sum stalled, displacement bound now %g", bounds.disp_max)
                    stall = 0

            if not active or r >= session_cfg.max_rounds:
                break
            if session_cfg.exclusive_neighbors:
                active = schedule(active, graph, priority)
            remaining = deadline - elapsed_ms()
            if remaining <= 0:
                break
            budget = max(MIN_AGENT_BUDGET_MS, remaining / len(active))
            if session_cfg.snapshot_reach:
                # optimize against everything within reach, not only current conflicts
                views = snapshot_exchange(graph, committed, reach=bounds.disp_max + spec.separation, spec=spec)
            else:
                views = snapshots
            agent_cfg = replace(cfg, time_budget_ms=budget)

            def optimize(oid: str) -> Chromosome:
                s = states[oid]
                ctx = AgentContext(s.object, list(views[oid]), spec, bounds,
                                   defensive_floor, elimination_penalty)
                seeds = [] if not s.best_plan.gene.flags.any() else [s.best_plan]
                if session_cfg.propose:
                    seeds += propose_plans(ctx)
                rng = _agent_seed(cfg.rng_seed, r, order[oid])
                return run_ga(ctx, agent_cfg, rng=rng, seeds=seeds)

            if pool is None:
                plans = [optimize(oid) for oid in active]
            else:
                plans = list(pool.map(optimize, active))
            # barrier: every agent optimized against the same commit
            for oid, plan in zip(active, plans):
                states[oid].commit(plan, bounds)
    finally:
        if pool is not None:
            pool.shutdown()

    for oid, (plan, out) in best_commit.items():
        s = states[oid]
        s.best_plan, s.outcome, s.committed_geometry = plan, out, out.geometry
    final_f = best_key[1]
    return SessionResult(
        geometries={oid: s.committed_geometry for oid, s in states.items()},
        plans={oid: s.best_plan for oid, s in states.items()},
        outcomes={oid: s.outcome for oid, s in states.items()},
        reports=reports,
        final_nc=best_key[0],
        final_f_sum=final_f,
        elapsed_ms=elapsed_ms(),
    )
