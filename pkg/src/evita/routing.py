"""Route/plan representation, feasibility, and 2-interchange local search.

Node 0 is the depot; shops are nodes ``1..n``. A route stores only its shop
sequence, the depot is implicit at both ends. Distances may be given as a
numpy matrix or as nested lists (``dm.tolist()``), the latter being much
faster to index from pure Python loops.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .logistics import VehicleConfig

DEPOT = 0
EPS = 1e-9


class InfeasibleInstanceError(ValueError):
    """A shop cannot be served even by a dedicated vehicle."""


def as_rows(dm) -> list[list[float]]:
    return dm.tolist() if isinstance(dm, np.ndarray) else dm


@dataclass(frozen=True)
class Route:
    shops: tuple[int, ...]
    load: int
    distance: float
    duration: float

    def __len__(self):
        return len(self.shops)


@dataclass(frozen=True)
class DayPlan:
    routes: tuple[Route, ...] = ()

    @property
    def total_distance(self) -> float:
        return sum(r.distance for r in self.routes)

    @property
    def shops(self) -> list[int]:
        return [s for r in self.routes for s in r.shops]

    def sequences(self) -> list[list[int]]:
        return [list(r.shops) for r in self.routes]


def route_distance(shops: Sequence[int], D) -> float:
    if not shops:
        return 0.0
    total = D[DEPOT][shops[0]] + D[shops[-1]][DEPOT]
    for a, b in zip(shops, shops[1:]):
        total += D[a][b]
    return total


def route_metrics(shops: Sequence[int], demands: Mapping[int, int], dm, vc: VehicleConfig) -> Route:
    """Load, distance and duration of depot -> shops... -> depot."""
    D = as_rows(dm)
    dist = route_distance(shops, D)
    load = sum(demands[s] for s in shops)
    duration = dist / vc.speed + len(shops) * vc.unload_time if shops else 0.0
    return Route(tuple(shops), load, dist, duration)


def is_feasible(route: Route, vc: VehicleConfig) -> bool:
    return route.load <= vc.capacity and route.duration <= vc.max_work_time + EPS


def fits(load: int, dist: float, n: int, vc: VehicleConfig) -> bool:
    return load <= vc.capacity and dist / vc.speed + n * vc.unload_time <= vc.max_work_time + EPS


def make_plan(sequences: Iterable[Sequence[int]], demands, dm, vc: VehicleConfig) -> DayPlan:
    D = as_rows(dm)
    return DayPlan(tuple(route_metrics(s, demands, D, vc) for s in sequences if len(s)))


def plan_is_feasible(plan: DayPlan, vc: VehicleConfig) -> bool:
    return all(is_feasible(r, vc) for r in plan.routes)


def plan_arcs(plan: DayPlan) -> list[tuple[int, int]]:
    arcs = []
    for r in plan.routes:
        nodes = (DEPOT, *r.shops, DEPOT)
        arcs.extend(zip(nodes, nodes[1:]))
    return arcs


def check_singletons(shops: Iterable[int], demands, D, vc: VehicleConfig) -> None:
    for s in shops:
        if not fits(demands[s], 2 * D[DEPOT][s], 1, vc):
            raise InfeasibleInstanceError(f"shop {s} cannot be served by a dedicated route")


def split_route(seq: list[int], demands, D, vc: VehicleConfig) -> list[list[int]] | None:
    """Cut ``seq`` once where it first breaks capacity or driver time.

    Returns the feasible pieces, or None if one cut is not enough.
    """
    load = 0
    dist = D[DEPOT][seq[0]] if seq else 0.0
    for p, s in enumerate(seq):
        if p:
            dist += D[seq[p - 1]][s]
        load += demands[s]
        if not fits(load, dist + D[s][DEPOT], p + 1, vc):
            if p == 0:
                return None
            head, tail = seq[:p], seq[p:]
            tail_load = sum(demands[t] for t in tail)
            if not fits(tail_load, route_distance(tail, D), len(tail), vc):
                return None
            return [head, tail]
    return [seq]


def _ends(r, p):
    return (r[p - 1] if p > 0 else DEPOT), (r[p + 1] if p + 1 < len(r) else DEPOT)


def swap_delta_intra(r: Sequence[int], p: int, q: int, D) -> float:
    """Distance change of swapping positions ``p`` and ``q`` within route ``r``."""
    if p > q:
        p, q = q, p
    a, b = r[p], r[q]
    pa, na = _ends(r, p)
    pb, nb = _ends(r, q)
    if q == p + 1:
        return D[pa][b] + D[a][nb] - D[pa][a] - D[b][nb]
    return D[pa][b] + D[b][na] + D[pb][a] + D[a][nb] - D[pa][a] - D[a][na] - D[pb][b] - D[b][nb]


def swap_delta_inter(r1: Sequence[int], p: int, r2: Sequence[int], q: int, D) -> tuple[float, float]:
    """Per-route distance changes of exchanging ``r1[p]`` with ``r2[q]``."""
    a, b = r1[p], r2[q]
    pa, na = _ends(r1, p)
    pb, nb = _ends(r2, q)
    return (D[pa][b] + D[b][na] - D[pa][a] - D[a][na],
            D[pb][a] + D[a][nb] - D[pb][b] - D[b][nb])


class _Plan:
    """Sequences plus cached distances and loads, for in-place improvement."""

    def __init__(self, sequences, demands, D):
        self.routes = [list(s) for s in sequences]
        self.dist = [route_distance(r, D) for r in self.routes]
        self.load = [sum(demands[s] for s in r) for r in self.routes]

    def set(self, ri, pieces, demands, D):
        for k, piece in enumerate(pieces):
            if k == 0:
                idx = ri
                self.routes[ri] = piece
            else:
                idx = len(self.routes)
                self.routes.append(piece)
                self.dist.append(0.0)
                self.load.append(0)
            self.dist[idx] = route_distance(piece, D)
            self.load[idx] = sum(demands[s] for s in piece)


def _intra(plan: _Plan, ri, p, q, demands, D, vc):
    """(delta, pieces) for an improving feasible intra-route swap, else None."""
    r = plan.routes[ri]
    delta = swap_delta_intra(r, p, q, D)
    if delta >= -EPS:
        return None
    new = list(r)
    new[p], new[q] = new[q], new[p]
    if fits(plan.load[ri], plan.dist[ri] + delta, len(r), vc):
        return delta, [new]
    pieces = split_route(new, demands, D, vc)
    if pieces is None:
        return None
    delta = sum(route_distance(x, D) for x in pieces) - plan.dist[ri]
    return (delta, pieces) if delta < -EPS else None


def _inter(plan: _Plan, r1, p, r2, q, demands, D, vc):
    """(delta, pieces1, pieces2) for an improving feasible cross-route swap, else None."""
    s1, s2 = plan.routes[r1], plan.routes[r2]
    d1, d2 = swap_delta_inter(s1, p, s2, q, D)
    if d1 + d2 >= -EPS:
        return None
    a, b = s1[p], s2[q]
    n1, n2 = list(s1), list(s2)
    n1[p], n2[q] = b, a
    l1 = plan.load[r1] - demands[a] + demands[b]
    l2 = plan.load[r2] - demands[b] + demands[a]
    ok1 = fits(l1, plan.dist[r1] + d1, len(n1), vc)
    ok2 = fits(l2, plan.dist[r2] + d2, len(n2), vc)
    if ok1 and ok2:
        return d1 + d2, [n1], [n2]
    p1 = [n1] if ok1 else split_route(n1, demands, D, vc)
    p2 = [n2] if ok2 else split_route(n2, demands, D, vc)
    if p1 is None or p2 is None:
        return None
    delta = sum(route_distance(x, D) for x in p1 + p2) - plan.dist[r1] - plan.dist[r2]
    return (delta, p1, p2) if delta < -EPS else None


def local_search(
    plan: DayPlan,
    demands: Mapping[int, int],
    dm,
    vc: VehicleConfig,
    rng: np.random.Generator,
    number_of_neighbors: int = 10,
    exhaustive: bool = False,
) -> DayPlan:
    """2-interchange improvement, first inside routes then between route pairs.

    Sampled mode tries ``max(len(route), number_of_neighbors)`` random swaps per
    route and one random swap per route pair, keeping each swap that strictly
    shortens the plan. Exhaustive mode instead applies the best swap over all
    pairs repeatedly until none improves. Routes broken by a swap are cut in two
    at the first violation; swaps that stay infeasible are skipped.
    """
    D = as_rows(dm)
    work = _Plan(plan.sequences(), demands, D)
    if exhaustive:
        _descend(work, demands, D, vc)
        return make_plan(work.routes, demands, D, vc)
    m = len(work.routes)
    for ri in range(m):
        trials = max(len(work.routes[ri]), number_of_neighbors)
        u = rng.random(2 * trials).tolist()
        for t in range(trials):
            k = len(work.routes[ri])
            if k < 2:
                break
            a = int(u[2 * t] * k)
            b = int(u[2 * t + 1] * (k - 1))
            b += b >= a
            res = _intra(work, ri, a, b, demands, D, vc)
            if res is not None:
                work.set(ri, res[1], demands, D)
    if m > 1:
        u = iter(rng.random(m * (m - 1)).tolist())
        for r1 in range(m):
            for r2 in range(r1 + 1, m):
                a = int(next(u) * len(work.routes[r1]))
                b = int(next(u) * len(work.routes[r2]))
                res = _inter(work, r1, a, r2, b, demands, D, vc)
                if res is not None:
                    work.set(r1, res[1], demands, D)
                    work.set(r2, res[2], demands, D)
    return make_plan(work.routes, demands, D, vc)


def _descend(work: _Plan, demands, D, vc) -> None:
    while True:
        best = None
        for ri, r in enumerate(work.routes):
            for a in range(len(r)):
                for b in range(a + 1, len(r)):
                    res = _intra(work, ri, a, b, demands, D, vc)
                    if res is not None and (best is None or res[0] < best[0]):
                        best = (res[0], ((ri, res[1]),))
        n = len(work.routes)
        for r1 in range(n):
            for r2 in range(r1 + 1, n):
                for a in range(len(work.routes[r1])):
                    for b in range(len(work.routes[r2])):
                        res = _inter(work, r1, a, r2, b, demands, D, vc)
                        if res is not None and (best is None or res[0] < best[0]):
                            best = (res[0], ((r1, res[1]), (r2, res[2])))
        if best is None:
            return
        for ri, pieces in best[1]:
            work.set(ri, pieces, demands, D)
