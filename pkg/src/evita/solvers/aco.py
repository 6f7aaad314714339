"""Ant colony VRP solver with a savings-augmented transition rule.

Ants build complete plans round-robin while sharing one pheromone matrix.
Every traversed arc gets a local deposit of ``1/d``; after each iteration the
iteration-best plan is reinforced multiplicatively and the iteration-worst plan
is reset to the initial level. Both the reinforcement weight ``rho`` and the
greedy-choice probability ``p`` decay by 5% per iteration down to a floor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Collection, Mapping, Sequence

import numpy as np

from ..logistics import ConfigError, VehicleConfig
from ..routing import DEPOT, DayPlan, check_singletons, fits, local_search, make_plan, plan_arcs

MIN_ARC = 1e-9  # km; coincident points would otherwise give an infinite heuristic


@dataclass(frozen=True)
class AcoParams:
    n_iters: int = 50
    n_ants: int = 25
    alpha: float = 0.2
    beta: float = 0.8
    gamma: float = 0.3
    tau0: float = 0.5
    rho0: float = 1.0
    rho_min: float = 0.1
    p0: float = 0.8
    p_min: float = 0.1
    number_of_neighbors: int = 10

    def __post_init__(self):
        if self.n_iters < 1 or self.n_ants < 1:
            raise ConfigError("n_iters and n_ants must be >= 1")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ConfigError("alpha, beta, gamma must be non-negative")
        if not self.tau0 > 0:
            raise ConfigError("tau0 must be positive")
        if not 0 < self.rho_min <= self.rho0 <= 1:
            raise ConfigError("need 0 < rho_min <= rho0 <= 1")
        if not 0 < self.p_min <= self.p0 <= 1:
            raise ConfigError("need 0 < p_min <= p0 <= 1")


@dataclass
class AntState:
    position: int
    not_visited: list[int]
    routes: list[list[int]] = field(default_factory=list)
    current: list[int] = field(default_factory=list)
    remaining_time: float = 0.0
    remaining_load: float = 0.0


def heuristic_matrix(dm: np.ndarray, beta: float, gamma: float) -> np.ndarray:
    """``eta^beta * mu^gamma`` with ``eta = 1/d`` and ``mu`` the C&W saving.

    From the depot every saving is zero, so that row uses ``eta^beta`` alone.
    """
    d = np.maximum(np.asarray(dm, dtype=float), MIN_ARC)
    eta = 1.0 / d
    mu = dm[:, [DEPOT]] + dm[[DEPOT], :] - dm
    mu = np.maximum(mu, 0.0)
    h = eta**beta * mu**gamma
    h[DEPOT] = eta[DEPOT] ** beta
    return h


def transition(
    ant: AntState,
    tau: np.ndarray,
    dm,
    demands: Mapping[int, int],
    vc: VehicleConfig,
    p_t: float,
    rng: np.random.Generator,
    alpha: float = 0.2,
    beta: float = 0.8,
    gamma: float = 0.3,
    heuristic: np.ndarray | None = None,
) -> int:
    """Next node for ``ant``: greedy argmax with probability ``p_t``, else uniform.

    Returns the depot instead when the chosen shop cannot be served and still
    reach the depot within the remaining time and load.
    """
    if heuristic is None:
        heuristic = heuristic_matrix(np.asarray(dm, dtype=float), beta, gamma)
    i = ant.position
    S = ant.not_visited
    if rng.random() <= p_t:
        cand = np.asarray(S)
        scores = tau[i, cand] ** alpha * heuristic[i, cand]
        j = int(cand[int(np.argmax(scores))])
    else:
        j = S[int(rng.integers(len(S)))]
    time = (dm[i][j] + dm[j][DEPOT]) / vc.speed + vc.unload_time
    if time <= ant.remaining_time + 1e-9 and demands[j] <= ant.remaining_load:
        return j
    return DEPOT


def update_pheromones_local(tau: np.ndarray, arcs: Sequence[tuple[int, int]], dm) -> np.ndarray:
    """Add ``1/d`` on every traversed arc (both directions). Zero-length arcs are skipped."""
    for a, b in arcs:
        d = dm[a][b]
        if d <= 0:
            continue
        tau[a, b] += 1.0 / d
        if a != b:
            tau[b, a] += 1.0 / d
    return tau


def _undirected(arcs) -> list[tuple[int, int]]:
    return sorted({(min(a, b), max(a, b)) for a, b in arcs})


def update_pheromones_posteriori(
    tau: np.ndarray,
    best_arcs: Sequence[tuple[int, int]],
    worst_arcs: Sequence[tuple[int, int]],
    min_cost: float,
    rho: float,
    tau0: float,
) -> np.ndarray:
    """Reset the worst path to ``tau0``, then scale the best path by ``rho + (1-rho)/min_cost``.

    Arcs shared by both paths therefore end up reinforced from ``tau0``.
    """
    if not min_cost > 0:
        raise ValueError("min_cost must be positive")
    for a, b in _undirected(worst_arcs):
        tau[a, b] = tau[b, a] = tau0
    factor = rho + (1.0 - rho) / min_cost
    for a, b in _undirected(best_arcs):
        tau[a, b] *= factor
        if a != b:
            tau[b, a] = tau[a, b]
    return tau


def decay_parameter(x_prev: float, x_min: float) -> float:
    return max(0.95 * x_prev, x_min)


def valid_random_solution(shops: Sequence[int], demands, D, vc: VehicleConfig, rng) -> list[list[int]]:
    """Random shop order cut greedily into feasible routes."""
    order = [shops[k] for k in rng.permutation(len(shops))]
    routes: list[list[int]] = []
    cur: list[int] = []
    load = 0
    dist = 0.0
    for s in order:
        if cur:
            nd = dist - D[cur[-1]][DEPOT] + D[cur[-1]][s] + D[s][DEPOT]
            if fits(load + demands[s], nd, len(cur) + 1, vc):
                cur.append(s)
                load += demands[s]
                dist = nd
                continue
            routes.append(cur)
        cur, load, dist = [s], demands[s], 2 * D[DEPOT][s]
    if cur:
        routes.append(cur)
    return routes


def _new_ant(shops: list[int], vc: VehicleConfig) -> AntState:
    return AntState(DEPOT, list(shops), remaining_time=vc.max_work_time, remaining_load=vc.capacity)


def aco_solve(
    shops_today: Collection[int],
    demands: Mapping[int, int],
    dm,
    vc: VehicleConfig,
    params: AcoParams = AcoParams(),
    rng: np.random.Generator | None = None,
    trace: list | None = None,
) -> DayPlan:
    """Best plan found by the colony. ``trace``, if given, collects per-iteration state."""
    rng = rng if rng is not None else np.random.default_rng()
    dm = np.asarray(dm, dtype=float)
    shops = sorted(shops_today)
    if not shops:
        return DayPlan()
    # Work on the day's sub-problem: local node 0 is the depot.
    nodes = [DEPOT] + shops
    sub = dm[np.ix_(nodes, nodes)]
    D = sub.tolist()
    local_dem = {k: demands[s] for k, s in enumerate(nodes) if k}
    local_shops = list(range(1, len(nodes)))
    check_singletons(local_shops, local_dem, D, vc)

    heur = heuristic_matrix(sub, params.beta, params.gamma)
    tau = np.full(sub.shape, params.tau0)
    best_routes = valid_random_solution(local_shops, local_dem, D, vc, rng)
    best_plan = make_plan(best_routes, local_dem, D, vc)
    global_cost = best_plan.total_distance
    rho, p_t = params.rho0, params.p0

    for it in range(params.n_iters):
        ants = [_new_ant(local_shops, vc) for _ in range(params.n_ants)]
        active = list(ants)
        while active:
            for ant in active:
                nxt = transition(
                    ant, tau, D, local_dem, vc, p_t, rng,
                    params.alpha, params.beta, params.gamma, heur,
                )
                update_pheromones_local(tau, [(ant.position, nxt)], D)
                if nxt == DEPOT:
                    ant.routes.append(ant.current)
                    ant.current = []
                    ant.remaining_time = vc.max_work_time
                    ant.remaining_load = vc.capacity
                else:
                    ant.remaining_time -= D[ant.position][nxt] / vc.speed + vc.unload_time
                    ant.remaining_load -= local_dem[nxt]
                    ant.current.append(nxt)
                    ant.not_visited.remove(nxt)
                ant.position = nxt
            for ant in active:
                if not ant.not_visited and ant.current:
                    update_pheromones_local(tau, [(ant.position, DEPOT)], D)
                    ant.routes.append(ant.current)
                    ant.current = []
                    ant.position = DEPOT
            active = [a for a in active if a.not_visited]

        plans = [
            local_search(make_plan(a.routes, local_dem, D, vc), local_dem, D, vc, rng,
                         params.number_of_neighbors)
            for a in ants
        ]
        costs = [pl.total_distance for pl in plans]
        ib = min(range(len(plans)), key=lambda k: (costs[k], k))
        iw = max(range(len(plans)), key=lambda k: (costs[k], -k))
        if costs[ib] > 0:
            update_pheromones_posteriori(
                tau, plan_arcs(plans[ib]), plan_arcs(plans[iw]), costs[ib], rho, params.tau0
            )
        if global_cost > costs[ib]:
            best_plan, global_cost = plans[ib], costs[ib]
        if trace is not None:
            trace.append({"iteration": it, "rho": rho, "p": p_t, "best": global_cost,
                          "min_tau": float(tau.min()), "plans": plans})
        rho = decay_parameter(rho, params.rho_min)
        p_t = decay_parameter(p_t, params.p_min)

    return make_plan(([nodes[k] for k in r.shops] for r in best_plan.routes), demands, dm, vc)
