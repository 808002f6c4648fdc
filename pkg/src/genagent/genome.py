"""Plan encoding and the per-agent genetic algorithm.

A gene is ``[flags | params]``: one bit per operator admissible for the
object kind and one real per operator parameter. Parameters are always
carried, but only those whose operator flag is set affect the plan.

Random numbers come from numpy's PCG64 bit generator (``numpy.random.Generator``),
seeded from :attr:`GaConfig.rng_seed` unless a generator is passed in.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .constraints import DEFENSIVE_FLOOR
from .errors import KindMismatch
from .fitness import ELIMINATION_PENALTY, FitnessComponents, FitnessContext, general_fitness
from .geometry import ELIMINATED, MapObject, ScaleSpec
from .operators import (
    KIND_OPERATORS,
    KIND_PARAMS,
    PARAM_OPERATOR,
    Bounds,
    PlanOutcome,
    apply_plan,
    identity_params,
)


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 20
    max_generations: int = 50
    fitness_threshold: float = 0.0
    time_budget_ms: float = 10_000.0
    tournament_size: int = 2
    crossover_rate: float = 0.9
    flag_mutation_rate: float = 0.05
    param_mutation_sigma: float = 0.1
    elitism_count: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        for name in ("crossover_rate", "flag_mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.param_mutation_sigma < 0:
            raise ValueError("param_mutation_sigma must be >= 0")
        if not 0 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must lie in [0, population_size)")
        if self.time_budget_ms < 0:
            raise ValueError("time_budget_ms must be >= 0")


@dataclass(frozen=True, eq=False)
class Gene:
    object_id: str
    kind: str
    flags: np.ndarray
    params: np.ndarray

    def __post_init__(self):
        flags = np.asarray(self.flags, dtype=np.uint8).copy()
        params = np.asarray(self.params, dtype=np.float64).copy()
        if len(flags) != len(KIND_OPERATORS[self.kind]):
            raise ValueError(f"{self.kind} gene needs {len(KIND_OPERATORS[self.kind])} flags")
        if len(params) != len(KIND_PARAMS[self.kind]):
            raise ValueError(f"{self.kind} gene needs {len(KIND_PARAMS[self.kind])} params")
        if ((flags != 0) & (flags != 1)).any():
            raise ValueError("flags must be 0 or 1")
        flags.setflags(write=False)
        params.setflags(write=False)
        object.__setattr__(self, "flags", flags)
        object.__setattr__(self, "params", params)

    @property
    def n_flags(self) -> int:
        return len(self.flags)

    def encode(self) -> np.ndarray:
        return np.concatenate((self.flags.astype(np.float64), self.params))

    @classmethod
    def decode(cls, object_id: str, kind: str, vector) -> Gene:
        nf = len(KIND_OPERATORS[kind])
        v = np.asarray(vector, dtype=np.float64)
        return cls(object_id, kind, np.rint(v[:nf]).astype(np.uint8), v[nf:])

    def effective_params(self) -> np.ndarray:
        """Params with those of unset operators replaced by identity values."""
        on = dict(zip(KIND_OPERATORS[self.kind], self.flags))
        ident = identity_params(self.kind)
        used = np.array([bool(on[PARAM_OPERATOR[n]]) for n in KIND_PARAMS[self.kind]])
        return np.where(used, self.params, ident)

    def canonical(self) -> tuple:
        """Plan identity used for caching and tie-breaks."""
        on = dict(zip(KIND_OPERATORS[self.kind], self.flags))
        if on[KIND_OPERATORS[self.kind][-1]]:  # eliminate makes every other bit moot
            flags = tuple(0 for _ in self.flags[:-1]) + (1,)
            return flags + tuple(identity_params(self.kind).tolist())
        return tuple(int(f) for f in self.flags) + tuple(self.effective_params().tolist())

    def __eq__(self, other) -> bool:
        return (isinstance(other, Gene) and self.object_id == other.object_id and self.kind == other.kind
                and np.array_equal(self.flags, other.flags) and np.array_equal(self.params, other.params))

    def __hash__(self) -> int:
        return hash((self.object_id, self.kind, self.flags.tobytes(), self.params.tobytes()))

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "kind": self.kind,
            "flags": {op.value: int(f) for op, f in zip(KIND_OPERATORS[self.kind], self.flags)},
            "params": dict(zip(KIND_PARAMS[self.kind], self.params.tolist())),
        }


@dataclass(eq=False)
class Chromosome:
    gene: Gene
    fitness: FitnessComponents | None = None

    @property
    def kind(self) -> str:
        return self.gene.kind

    def with_gene(self, gene: Gene) -> Chromosome:
        return Chromosome(gene)

    def sort_key(self) -> tuple:
        """Minimization key: f, then nc, os, dp, then the canonical encoding."""
        fit = self.fitness
        if fit is None:
            raise ValueError("chromosome is not evaluated")
        return (fit.f, fit.nc, fit.os, fit.dp, self.gene.canonical())


def zero_chromosome(object_id: str, kind: str) -> Chromosome:
    return Chromosome(Gene(object_id, kind, np.zeros(len(KIND_OPERATORS[kind]), np.uint8), identity_params(kind)))


def _snap(params: np.ndarray, kind: str, bounds: Bounds) -> np.ndarray:
    lattice = bounds.lattice_values(kind)
    if lattice is None:
        return params
    return np.array([vals[int(np.argmin(np.abs(vals - p)))] for p, vals in zip(params, lattice)])


def random_chromosome(object_id: str, kind: str, bounds: Bounds, rng: np.random.Generator) -> Chromosome:
    nf = len(KIND_OPERATORS[kind])
    flags = rng.integers(0, 2, size=nf).astype(np.uint8)
    lattice = bounds.lattice_values(kind)
    if lattice is None:
        lo, hi = bounds.param_range(kind)
        params = rng.uniform(lo, hi)
    else:
        params = np.array([vals[rng.integers(len(vals))] for vals in lattice])
    return Chromosome(Gene(object_id, kind, flags, params))


def init_population(kind: str, cfg: GaConfig, rng: np.random.Generator, bounds: Bounds,
                    object_id: str = "") -> list[Chromosome]:
    """Zero plan first, then uniformly random plans."""
    pop = [zero_chromosome(object_id, kind)]
    while len(pop) < cfg.population_size:
        pop.append(random_chromosome(object_id, kind, bounds, rng))
    return pop


def crossover(a: Chromosome, b: Chromosome, rng: np.random.Generator, rate: float = 0.9,
              point: int | None = None) -> tuple[Chromosome, Chromosome]:
    """Single-point crossover on ``[flags | params]``.

    With probability ``1 - rate`` the children are copies of the parents.
    ``point`` forces the cut (number of leading positions taken from ``a``).
    """
    if a.gene.kind != b.gene.kind:
        raise KindMismatch(f"cannot cross {a.gene.kind} with {b.gene.kind}")
    va = a.gene.encode()
    vb = b.gene.encode()
    n = len(va)
    if point is None:
        if rng.random() >= rate:
            return Chromosome(a.gene), Chromosome(b.gene)
        point = int(rng.integers(1, n))
    if not 0 <= point <= n:
        raise ValueError(f"crossover point {point} outside [0, {n}]")
    ca = np.concatenate((va[:point], vb[point:]))
    cb = np.concatenate((vb[:point], va[point:]))
    g = a.gene
    return (Chromosome(Gene.decode(g.object_id, g.kind, ca)),
            Chromosome(Gene.decode(g.object_id, g.kind, cb)))


def mutate(c: Chromosome, cfg: GaConfig, rng: np.random.Generator, bounds: Bounds) -> Chromosome:
    g = c.gene
    flip = rng.random(len(g.flags)) < cfg.flag_mutation_rate
    flags = np.where(flip, 1 - g.flags, g.flags).astype(np.uint8)
    lo, hi = bounds.param_range(g.kind)
    noise = rng.normal(0.0, 1.0, size=len(g.params)) * (cfg.param_mutation_sigma * (hi - lo))
    params = np.clip(g.params + noise, lo, hi)
    params = _snap(params, g.kind, bounds)
    return Chromosome(Gene(g.object_id, g.kind, flags, params))


def clamp_to_bounds(c: Chromosome, bounds: Bounds) -> Chromosome:
    lo, hi = bounds.param_range(c.kind)
    params = _snap(np.clip(c.gene.params, lo, hi), c.kind, bounds)
    return Chromosome(replace(c.gene, params=params))


@dataclass
class AgentContext:
    """Everything one agent's optimizer needs for a round."""

    obj: MapObject
    neighbors: list[tuple[str, object]]
    spec: ScaleSpec
    bounds: Bounds
    defensive_floor: float = DEFENSIVE_FLOOR
    elimination_penalty: float = ELIMINATION_PENALTY
    _fitness: FitnessContext | None = field(default=None, repr=False)

    @property
    def fitness(self) -> FitnessContext:
        if self._fitness is None:
            self._fitness = FitnessContext(
                self.obj, self.neighbors, self.spec,
                defensive_floor=self.defensive_floor, elimination_penalty=self.elimination_penalty,
            )
        return self._fitness


class _Evaluator:
    """Evaluation with two caches: by plan identity and by resulting geometry."""

    def __init__(self, ctx: AgentContext):
        self.ctx = ctx
        self.by_plan: dict[tuple, tuple[FitnessComponents, PlanOutcome]] = {}
        self.by_geometry: dict[tuple, FitnessComponents] = {}
        self.evaluations = 0

    def __call__(self, c: Chromosome) -> FitnessComponents:
        key = c.gene.canonical()
        hit = self.by_plan.get(key)
        if hit is None:
            out = apply_plan(self.ctx.obj, c, self.ctx.bounds)
            gkey = _geometry_key(out)
            fit = self.by_geometry.get(gkey)
            if fit is None:
                fit = self.ctx.fitness.evaluate(out)
                self.evaluations += 1
                self.by_geometry[gkey] = fit
            self.by_plan[key] = (fit, out)
        else:
            fit = hit[0]
        c.fitness = fit
        return fit


def _geometry_key(out: PlanOutcome) -> tuple:
    if out.geometry is ELIMINATED:
        return ("eliminated",)
    return (out.shaped.coords.tobytes(), out.geometry.coords.tobytes(), out.dx, out.dy)


def _tournament(pop: list[Chromosome], k: int, rng: np.random.Generator) -> Chromosome:
    picks = rng.integers(0, len(pop), size=k)
    return min((pop[i] for i in picks), key=Chromosome.sort_key)


def run_ga(ctx: AgentContext, cfg: GaConfig, *, rng: np.random.Generator | None = None,
           seeds: list[Chromosome] = (), trace: list | None = None) -> Chromosome:
    """Evolve the agent's plan; return the best chromosome ever evaluated.

    Stops when the best f reaches ``cfg.fitness_threshold``, after
    ``cfg.max_generations`` generations, or once ``cfg.time_budget_ms`` has
    elapsed (checked between generations). ``seeds`` replace the first
    random members of the initial population. When ``trace`` is a list it
    receives one ``(generation, best_ever_f, population_best_f)`` tuple per
    generation.
    """
    t0 = time.perf_counter()
    budget = cfg.time_budget_ms / 1000.0
    if rng is None:
        rng = np.random.default_rng(cfg.rng_seed)
    kind = ctx.obj.kind
    evaluate = _Evaluator(ctx)

    pop = init_population(kind, cfg, rng, ctx.bounds, ctx.obj.id)
    for i, s in enumerate(seeds[: cfg.population_size - 1]):
        pop[i + 1] = clamp_to_bounds(s, ctx.bounds)
    for c in pop:
        evaluate(c)
    best = min(pop, key=Chromosome.sort_key)
    generation = 0
    if trace is not None:
        trace.append((0, best.fitness.f, best.fitness.f))

    while True:
        if best.fitness.f <= cfg.fitness_threshold:
            break
        if generation >= cfg.max_generations:
            break
        if time.perf_counter() - t0 >= budget:
            break
        ranked = sorted(pop, key=Chromosome.sort_key)
        nxt = [Chromosome(c.gene, c.fitness) for c in ranked[: cfg.elitism_count]]
        while len(nxt) < cfg.population_size:
            p1 = _tournament(pop, cfg.tournament_size, rng)
            p2 = _tournament(pop, cfg.tournament_size, rng)
            c1, c2 = crossover(p1, p2, rng, cfg.crossover_rate)
            nxt.append(mutate(c1, cfg, rng, ctx.bounds))
            if len(nxt) < cfg.population_size:
                nxt.append(mutate(c2, cfg, rng, ctx.bounds))
        pop = nxt
        for c in pop:
            if c.fitness is None:
                evaluate(c)
        generation += 1
        gen_best = min(pop, key=Chromosome.sort_key)
        if gen_best.sort_key() < best.sort_key():
            best = gen_best
        if trace is not None:
            trace.append((generation, best.fitness.f, gen_best.fitness.f))
    return Chromosome(best.gene, best.fitness)


def enumerate_lattice_optimum(ctx: AgentContext) -> tuple[Chromosome, int]:
    """Exhaustive search over every flag/lattice combination.

    Reference for the GA on small lattices; returns the best chromosome and
    the number of plans visited.
    """
    kind = ctx.obj.kind
    lattice = ctx.bounds.lattice_values(kind)
    if lattice is None:
        raise ValueError("exhaustive search needs a parameter lattice")
    nf = len(KIND_OPERATORS[kind])
    best = None
    visited = 0
    for flags in itertools.product((0, 1), repeat=nf):
        for params in itertools.product(*lattice):
            c = Chromosome(Gene(ctx.obj.id, kind, np.array(flags, np.uint8), np.array(params)))
            out = apply_plan(ctx.obj, c, ctx.bounds)
            c.fitness = general_fitness(ctx.obj, out, ctx.neighbors, ctx.spec,
                                        defensive_floor=ctx.defensive_floor,
                                        elimination_penalty=ctx.elimination_penalty)
            visited += 1
            if best is None or c.sort_key() < best.sort_key():
                best = c
    return best, visited
