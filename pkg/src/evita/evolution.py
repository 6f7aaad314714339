"""Top level: pattern chromosomes, evaluation, single-objective GA and NSGA-II.

A chromosome is a tuple of admissible pattern ids, gene ``k`` belonging to
shop ``k + 1``. Fitness is inventory cost plus transport cost; NSGA-II keeps
the two apart as objectives.

Randomness is split in two: the GA operators draw from one generator seeded by
the run seed, and every (generation, individual, day) VRP call gets its own
stream derived from the run seed, so evaluation order never matters.
"""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .instance import Instance, distance_matrix
from .logistics import (
    ConfigError,
    DomainError,
    InventoryTable,
    VehicleConfig,
    Weekday,
    pattern_days,
    pattern_frequency,
)

Chromosome = tuple[int, ...]

_GA_STREAM = 0
_VRP_STREAM = 1


@dataclass(frozen=True, eq=False)
class Problem:
    instance: Instance
    table: InventoryTable
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    dm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.table.n_shops != self.instance.n_shops:
            raise ConfigError(
                f"inventory table has {self.table.n_shops} shops, instance {self.instance.n_shops}"
            )
        object.__setattr__(self, "dm", distance_matrix(self.instance))

    @property
    def n_shops(self) -> int:
        return self.instance.n_shops

    def admissible(self) -> list[tuple[int, ...]]:
        return [self.table.admissible_patterns(k) for k in range(1, self.n_shops + 1)]


@dataclass(frozen=True)
class CostReport:
    inventory: float
    transport: float

    @property
    def total(self) -> float:
        return self.inventory + self.transport

    @property
    def objectives(self) -> tuple[float, float]:
        return (self.inventory, self.transport)


@dataclass(frozen=True)
class GAConfig:
    pop_size: int = 100
    tournament_size: int = 2
    p_mutation: float = 0.2
    p_crossover: float = 1.0
    elite: int = 10
    generations: int = 100  # including the initial one

    def __post_init__(self):
        if self.pop_size < 2:
            raise ConfigError("pop_size must be >= 2")
        if not 1 <= self.tournament_size <= self.pop_size:
            raise ConfigError("tournament_size must be in [1, pop_size]")
        if not (0 <= self.p_mutation <= 1 and 0 <= self.p_crossover <= 1):
            raise ConfigError("probabilities must be in [0, 1]")
        if not 0 <= self.elite < self.pop_size:
            raise ConfigError("elite must be in [0, pop_size)")
        if self.generations < 1:
            raise ConfigError("generations must be >= 1")


def vrp_seed(run_seed: int, generation: int, individual: int) -> tuple[int, ...]:
    return (run_seed, _VRP_STREAM, generation, individual)


def evaluate(
    chromosome: Sequence[int],
    problem: Problem,
    solver: Callable,
    seed: int | Sequence[int] = 0,
    plans: list | None = None,
) -> CostReport:
    """Inventory cost from the table, transport cost from one VRP per weekday."""
    table = problem.table
    if len(chromosome) != problem.n_shops:
        raise DomainError("chromosome length differs from the number of shops")
    base = [seed] if isinstance(seed, (int, np.integer)) else list(seed)
    inventory = 0.0
    demands = {}
    days: dict[Weekday, list[int]] = {d: [] for d in Weekday}
    for shop, gene in enumerate(chromosome, start=1):
        try:
            entry = table.lookup(shop, pattern_frequency(gene))
        except DomainError as exc:
            raise DomainError(f"gene {gene} of shop {shop} is not admissible: {exc}") from None
        inventory += entry.cost
        demands[shop] = entry.size
        for d in pattern_days(gene):
            days[d].append(shop)
    distance = 0.0
    for d in Weekday:
        if not days[d]:
            continue
        plan = solver(days[d], demands, problem.dm, problem.vehicle,
                      np.random.default_rng([*base, int(d)]))
        distance += plan.total_distance
        if plans is not None:
            plans.append((d, plan))
    return CostReport(inventory, distance * problem.vehicle.cost_per_km)


# -- variation operators ---------------------------------------------------


def random_chromosome(admissible: Sequence[Sequence[int]], rng: np.random.Generator) -> Chromosome:
    return tuple(int(opts[rng.integers(len(opts))]) for opts in admissible)


def two_point_crossover(a: Chromosome, b: Chromosome, rng: np.random.Generator):
    n = len(a)
    if n < 2:
        return a, b
    if n == 2:
        x, y = 1, 2
    else:
        x, y = sorted(int(c) for c in rng.choice(np.arange(1, n), size=2, replace=False))
    return a[:x] + b[x:y] + a[y:], b[:x] + a[x:y] + b[y:]


def mutate(c: Chromosome, admissible: Sequence[Sequence[int]], rng: np.random.Generator) -> Chromosome:
    """Redraw the pattern of one random shop, different from the current one when possible."""
    k = int(rng.integers(len(c)))
    options = [p for p in admissible[k] if p != c[k]]
    if not options:
        return c
    return c[:k] + (int(options[rng.integers(len(options))]),) + c[k + 1:]


def _breed(p1, p2, cfg: GAConfig, admissible, rng):
    if rng.random() < cfg.p_crossover:
        c1, c2 = two_point_crossover(p1, p2, rng)
    else:
        c1, c2 = p1, p2
    out = []
    for c in (c1, c2):
        if rng.random() < cfg.p_mutation:
            c = mutate(c, admissible, rng)
        out.append(c)
    return out


def _evaluate_all(pop, problem, solver, run_seed, generation, map_fn):
    jobs = [(c, problem, solver, vrp_seed(run_seed, generation, i)) for i, c in enumerate(pop)]
    return list(map_fn(_evaluate_job, jobs))


def _evaluate_job(job):
    return evaluate(*job)


# -- single objective -------------------------------------------------------


@dataclass
class RunResult:
    best: Chromosome
    best_cost: CostReport
    history: list[dict]
    population: list[tuple[Chromosome, CostReport]]
    front: list["RankedIndividual"] = field(default_factory=list)


def tournament(costs: Sequence[float], size: int, rng: np.random.Generator) -> int:
    picks = rng.choice(len(costs), size=size, replace=False)
    return int(min(picks, key=lambda i: (costs[i], i)))


def run_single_objective(
    problem: Problem,
    solver: Callable,
    cfg: GAConfig = GAConfig(),
    seed: int = 0,
    map_fn: Callable = map,
    initial: Sequence[Chromosome] | None = None,
) -> RunResult:
    """Generational GA on total cost with an elite of ``cfg.elite``."""
    rng = np.random.default_rng([seed, _GA_STREAM])
    admissible = problem.admissible()
    pop = list(initial) if initial is not None else [
        random_chromosome(admissible, rng) for _ in range(cfg.pop_size)
    ]
    if len(pop) != cfg.pop_size:
        raise ConfigError("initial population size differs from pop_size")
    costs = _evaluate_all(pop, problem, solver, seed, 0, map_fn)
    best_i = min(range(len(pop)), key=lambda i: (costs[i].total, i))
    best, best_cost = pop[best_i], costs[best_i]
    history = [_history_row(0, costs, best_cost)]

    for gen in range(1, cfg.generations):
        totals = [c.total for c in costs]
        order = sorted(range(len(pop)), key=lambda i: (totals[i], i))
        elites = [pop[i] for i in order[: cfg.elite]]
        elite_costs = [costs[i] for i in order[: cfg.elite]]
        children: list[Chromosome] = []
        while len(children) < cfg.pop_size - cfg.elite:
            p1 = pop[tournament(totals, cfg.tournament_size, rng)]
            p2 = pop[tournament(totals, cfg.tournament_size, rng)]
            children.extend(_breed(p1, p2, cfg, admissible, rng))
        children = children[: cfg.pop_size - cfg.elite]
        child_costs = _evaluate_all(children, problem, solver, seed, gen, map_fn)
        pop = elites + children
        costs = elite_costs + child_costs
        for c, cost in zip(children, child_costs):
            if cost.total < best_cost.total:
                best, best_cost = c, cost
        history.append(_history_row(gen, costs, best_cost))

    return RunResult(best, best_cost, history, list(zip(pop, costs)))


def _history_row(gen, costs, best_cost, **extra):
    totals = [c.total for c in costs]
    return {
        "generation": gen,
        "best_so_far": best_cost.total,
        "generation_best": min(totals),
        "median": statistics.median(totals),
        **extra,
    }


# -- NSGA-II -------------------------------------------------------------------


@dataclass
class RankedIndividual:
    chromosome: Chromosome
    costs: CostReport
    rank: int = 0
    crowding: float = 0.0


def _objectives(x) -> tuple[float, ...]:
    if isinstance(x, CostReport):
        return x.objectives
    if isinstance(x, RankedIndividual):
        return x.costs.objectives
    return tuple(x)


def dominates(p: Sequence[float], q: Sequence[float]) -> bool:
    return all(a <= b for a, b in zip(p, q)) and any(a < b for a, b in zip(p, q))


def fast_non_dominated_sort(pop: Sequence) -> list[list[int]]:
    """Partition indices of ``pop`` into fronts F1, F2, ... (minimisation)."""
    n = len(pop)
    if n == 0:
        return []
    F = np.array([_objectives(x) for x in pop], dtype=float)
    le = (F[:, None, :] <= F[None, :, :]).all(axis=2)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=2)
    dom = le & lt  # dom[p, q]: p dominates q
    dominated_by = [np.flatnonzero(row).tolist() for row in dom]
    count = dom.sum(axis=0).tolist()
    fronts: list[list[int]] = [[p for p in range(n) if count[p] == 0]]
    while fronts[-1]:
        nxt = []
        for p in fronts[-1]:
            for q in dominated_by[p]:
                count[q] -= 1
                if count[q] == 0:
                    nxt.append(q)
        fronts.append(sorted(nxt))
    fronts.pop()
    return fronts


def crowding_distance(front: Sequence) -> list[float]:
    """Crowding distance of each member; boundary points get ``inf``."""
    objs = [_objectives(x) for x in front]
    n = len(objs)
    dist = [0.0] * n
    if n <= 2:
        return [math.inf] * n
    for m in range(len(objs[0])):
        order = sorted(range(n), key=lambda i: (objs[i][m], i))
        lo, hi = objs[order[0]][m], objs[order[-1]][m]
        dist[order[0]] = dist[order[-1]] = math.inf
        if hi == lo:
            continue
        for k in range(1, n - 1):
            i = order[k]
            dist[i] += (objs[order[k + 1]][m] - objs[order[k - 1]][m]) / (hi - lo)
    return dist


def crowded_less(a: RankedIndividual, b: RankedIndividual) -> bool:
    """``a`` is preferred over ``b``: lower rank, or same rank and less crowded."""
    return a.rank < b.rank or (a.rank == b.rank and a.crowding > b.crowding)


def rank_population(pop: Sequence[RankedIndividual]) -> list[list[int]]:
    fronts = fast_non_dominated_sort(pop)
    for r, front in enumerate(fronts, start=1):
        cd = crowding_distance([pop[i] for i in front])
        for i, d in zip(front, cd):
            pop[i].rank = r
            pop[i].crowding = d
    return fronts


def select_survivors(merged: Sequence[RankedIndividual], n: int) -> list[RankedIndividual]:
    """Whole fronts in order, the splitting front truncated by descending crowding."""
    fronts = rank_population(merged)
    out: list[RankedIndividual] = []
    for front in fronts:
        if len(out) + len(front) <= n:
            out.extend(merged[i] for i in front)
        else:
            rest = sorted(front, key=lambda i: (-merged[i].crowding, i))
            out.extend(merged[i] for i in rest[: n - len(out)])
            break
    return out


def binary_tournament(pop: Sequence[RankedIndividual], rng: np.random.Generator) -> RankedIndividual:
    i, j = (int(x) for x in rng.choice(len(pop), size=2, replace=False))
    return pop[j] if crowded_less(pop[j], pop[i]) else pop[i]


def run_nsga2(
    problem: Problem,
    solver: Callable,
    cfg: GAConfig = GAConfig(),
    seed: int = 0,
    map_fn: Callable = map,
    initial: Sequence[Chromosome] | None = None,
) -> RunResult:
    """NSGA-II on (inventory, transport). ``best`` is the final-front member of least total cost."""
    rng = np.random.default_rng([seed, _GA_STREAM])
    admissible = problem.admissible()
    chroms = list(initial) if initial is not None else [
        random_chromosome(admissible, rng) for _ in range(cfg.pop_size)
    ]
    costs = _evaluate_all(chroms, problem, solver, seed, 0, map_fn)
    pop = [RankedIndividual(c, k) for c, k in zip(chroms, costs)]
    rank_population(pop)
    history = [_nsga_history(0, pop)]

    for gen in range(1, cfg.generations):
        children: list[Chromosome] = []
        while len(children) < cfg.pop_size:
            p1 = binary_tournament(pop, rng).chromosome
            p2 = binary_tournament(pop, rng).chromosome
            children.extend(_breed(p1, p2, cfg, admissible, rng))
        children = children[: cfg.pop_size]
        child_costs = _evaluate_all(children, problem, solver, seed, gen, map_fn)
        merged = pop + [RankedIndividual(c, k) for c, k in zip(children, child_costs)]
        pop = select_survivors(merged, cfg.pop_size)
        history.append(_nsga_history(gen, pop))

    fronts = rank_population(pop)
    front = [pop[i] for i in fronts[0]]
    best = min(front, key=lambda r: r.costs.total)
    return RunResult(best.chromosome, best.costs, history,
                     [(r.chromosome, r.costs) for r in pop], front)


def _nsga_history(gen, pop):
    costs = [r.costs for r in pop]
    best = min(costs, key=lambda c: c.total)
    return _history_row(gen, costs, best, front_size=sum(1 for r in pop if r.rank == 1))
