"""CWTS: tabu search started from the Clarke & Wright plan.

Neighbourhood: swap two shops of one route, swap two shops of different
routes, or move one shop to a fresh route of its own. Only feasible
neighbours are considered; there is no repair step here.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Mapping, NamedTuple

from ..logistics import ConfigError, VehicleConfig
from ..routing import DEPOT, EPS, DayPlan, as_rows, fits, make_plan, route_distance
from .cw import clarke_wright

INTRA, INTER, EXTRACT = "swapIntraRoute", "swapInterRoute", "extractToNewRoute"


class Move(NamedTuple):
    kind: str
    i: int
    j: int = -1  # unused for EXTRACT


class SearchStalled(RuntimeError):
    """Every neighbour is tabu (and none qualifies for aspiration), or none exists."""


@dataclass(frozen=True)
class TabuConfig:
    tenure: int = 12
    stagnation_limit: int = 20
    max_iterations: int = 10_000

    def __post_init__(self):
        if self.tenure < 1 or self.stagnation_limit < 1 or self.max_iterations < 1:
            raise ConfigError("tabu tenure, stagnation limit and iteration cap must be >= 1")


class TabuList:
    def __init__(self):
        self.entries: dict[Move, int] = {}

    def __contains__(self, move: Move) -> bool:
        return move in self.entries

    def __len__(self):
        return len(self.entries)

    def add(self, move: Move, tenure: int) -> None:
        self.entries[move] = tenure  # re-insertion refreshes, never stacks

    def tick(self) -> None:
        self.entries = {m: t - 1 for m, t in self.entries.items() if t > 1}


class _State:
    """Mutable plan with cached per-route distance/load and shop positions."""

    def __init__(self, sequences, demands, D):
        self.routes = [list(s) for s in sequences if s]
        self.D = D
        self.demands = demands
        self.dist = [route_distance(r, D) for r in self.routes]
        self.load = [sum(demands[s] for s in r) for r in self.routes]
        self.reindex()

    def reindex(self):
        self.where = {s: (ri, p) for ri, r in enumerate(self.routes) for p, s in enumerate(r)}

    @property
    def cost(self) -> float:
        return sum(self.dist)

    def _nbrs(self, ri, p):
        r = self.routes[ri]
        return (r[p - 1] if p > 0 else DEPOT), (r[p + 1] if p + 1 < len(r) else DEPOT)

    def evaluate(self, move: Move, vc: VehicleConfig):
        """Return the cost delta of ``move`` or None if the neighbour is infeasible."""
        D = self.D
        if move.kind == EXTRACT:
            ri, p = self.where[move.i]
            pa, na = self._nbrs(ri, p)
            i = move.i
            new = self.dist[ri] - D[pa][i] - D[i][na] + D[pa][na]
            if not fits(self.load[ri] - self.demands[i], new, len(self.routes[ri]) - 1, vc):
                return None
            return new - self.dist[ri] + 2 * D[DEPOT][i]
        (r1, p), (r2, q) = self.where[move.i], self.where[move.j]
        a, b = move.i, move.j
        if move.kind == INTRA:
            if p > q:
                p, q, a, b = q, p, b, a
            pa, na = self._nbrs(r1, p)
            pb, nb = self._nbrs(r1, q)
            if q == p + 1:
                delta = D[pa][b] + D[b][a] + D[a][nb] - D[pa][a] - D[a][b] - D[b][nb]
            else:
                delta = (D[pa][b] + D[b][na] + D[pb][a] + D[a][nb]
                         - D[pa][a] - D[a][na] - D[pb][b] - D[b][nb])
            if not fits(self.load[r1], self.dist[r1] + delta, len(self.routes[r1]), vc):
                return None
            return delta
        pa, na = self._nbrs(r1, p)
        pb, nb = self._nbrs(r2, q)
        d1 = D[pa][b] + D[b][na] - D[pa][a] - D[a][na]
        d2 = D[pb][a] + D[a][nb] - D[pb][b] - D[b][nb]
        dem = self.demands
        if not fits(self.load[r1] - dem[a] + dem[b], self.dist[r1] + d1, len(self.routes[r1]), vc):
            return None
        if not fits(self.load[r2] - dem[b] + dem[a], self.dist[r2] + d2, len(self.routes[r2]), vc):
            return None
        return d1 + d2

    def apply(self, move: Move) -> None:
        if move.kind == EXTRACT:
            ri, p = self.where[move.i]
            self.routes[ri].pop(p)
            self.routes.append([move.i])
            if not self.routes[ri]:
                self.routes.pop(ri)
        else:
            (r1, p), (r2, q) = self.where[move.i], self.where[move.j]
            self.routes[r1][p], self.routes[r2][q] = move.j, move.i
        self.dist = [route_distance(r, self.D) for r in self.routes]
        self.load = [sum(self.demands[s] for s in r) for r in self.routes]
        self.reindex()

    def moves(self) -> list[Move]:
        shops = sorted(self.where)
        intra, inter = [], []
        for x, i in enumerate(shops):
            ri = self.where[i][0]
            for j in shops[x + 1:]:
                if self.where[j][0] == ri:
                    intra.append(Move(INTRA, i, j))
                else:
                    inter.append(Move(INTER, i, j))
        extract = [Move(EXTRACT, i) for i in shops if len(self.routes[self.where[i][0]]) > 1]
        return intra + inter + extract


def _best_move(state: _State, tabu: TabuList, best_known_cost: float, vc: VehicleConfig):
    base = state.cost
    best_move, best_cost = None, float("inf")
    for move in state.moves():
        delta = state.evaluate(move, vc)
        if delta is None:
            continue
        cost = base + delta
        is_tabu = move in tabu and not cost < best_known_cost - EPS
        if cost < best_cost and not is_tabu:
            best_move, best_cost = move, cost
    if best_move is None:
        raise SearchStalled("no admissible neighbour")
    return best_move, best_cost


def best_neighbour(
    current: DayPlan,
    tabu: TabuList,
    best_known_cost: float,
    demands: Mapping[int, int],
    dm,
    vc: VehicleConfig,
) -> tuple[DayPlan, Move]:
    """Lowest-cost admissible neighbour of ``current`` and the move producing it.

    Tabu moves are admissible only when they beat ``best_known_cost``. The
    neighbour may be worse than ``current``.
    """
    D = as_rows(dm)
    state = _State(current.sequences(), demands, D)
    move, _ = _best_move(state, tabu, best_known_cost, vc)
    state.apply(move)
    return make_plan(state.routes, demands, D, vc), move


def cwts_solve(
    shops_today: Collection[int],
    demands: Mapping[int, int],
    dm,
    vc: VehicleConfig,
    cfg: TabuConfig = TabuConfig(),
    initial: DayPlan | None = None,
    trace: list | None = None,
) -> DayPlan:
    """Tabu search seeded with Clarke & Wright (or ``initial`` when given).

    Stops after ``cfg.stagnation_limit`` consecutive iterations without a new
    best, and returns the best plan visited.
    """
    D = as_rows(dm)
    seed = initial if initial is not None else clarke_wright(shops_today, demands, D, vc)
    state = _State(seed.sequences(), demands, D)
    best_routes = [list(r) for r in state.routes]
    best_cost = state.cost
    tabu = TabuList()
    stagnant = 0
    for it in range(cfg.max_iterations):
        try:
            move, cost = _best_move(state, tabu, best_cost, vc)
        except SearchStalled:
            break
        state.apply(move)
        if cost < best_cost - EPS:
            best_routes = [list(r) for r in state.routes]
            best_cost = state.cost
            stagnant = 0
        else:
            stagnant += 1
        tabu.tick()
        tabu.add(move, cfg.tenure)
        if trace is not None:
            trace.append({"iteration": it, "move": move, "cost": state.cost, "best": best_cost,
                          "tabu": dict(tabu.entries), "plan": make_plan(state.routes, demands, D, vc)})
        if stagnant >= cfg.stagnation_limit:
            break
    return make_plan(best_routes, demands, D, vc)
