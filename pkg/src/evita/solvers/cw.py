"""Clarke & Wright parallel savings, optionally followed by local search (CWLS)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Mapping

import numpy as np

from ..logistics import VehicleConfig
from ..routing import DEPOT, DayPlan, as_rows, check_singletons, local_search, make_plan, fits


@dataclass(frozen=True)
class LocalSearchConfig:
    number_of_neighbors: int = 10
    exhaustive: bool = False


def savings(shops: Collection[int], dm) -> list[tuple[float, int, int]]:
    """Ordered-pair savings ``(value, i, j)``, largest first, ties by (i, j)."""
    D = as_rows(dm)
    out = [
        (D[i][DEPOT] + D[DEPOT][j] - D[i][j], i, j)
        for i in shops
        for j in shops
        if i != j
    ]
    out.sort(key=lambda s: (-s[0], s[1], s[2]))
    return out


def clarke_wright(shops_today: Collection[int], demands: Mapping[int, int], dm, vc: VehicleConfig) -> DayPlan:
    D = as_rows(dm)
    shops = sorted(shops_today)
    check_singletons(shops, demands, D, vc)
    route_of = {s: [s] for s in shops}
    load = {s: demands[s] for s in shops}  # keyed by route head
    dist = {s: 2 * D[DEPOT][s] for s in shops}
    head = {s: s for s in shops}

    for value, i, j in savings(shops, D):
        if value <= 0:
            break
        hi, hj = head[i], head[j]
        if hi == hj:
            continue
        ri, rj = route_of[hi], route_of[hj]
        if ri[-1] != i or rj[0] != j:
            continue
        new_load = load[hi] + load[hj]
        new_dist = dist[hi] + dist[hj] - value
        if not fits(new_load, new_dist, len(ri) + len(rj), vc):
            continue
        ri.extend(rj)
        load[hi], dist[hi] = new_load, new_dist
        for s in rj:
            head[s] = hi
        del route_of[hj], load[hj], dist[hj]

    return make_plan((route_of[h] for h in sorted(route_of)), demands, D, vc)


def cwls_solve(
    shops_today: Collection[int],
    demands: Mapping[int, int],
    dm,
    vc: VehicleConfig,
    rng: np.random.Generator,
    cfg: LocalSearchConfig = LocalSearchConfig(),
) -> DayPlan:
    D = as_rows(dm)
    plan = clarke_wright(shops_today, demands, D, vc)
    return local_search(plan, demands, D, vc, rng, cfg.number_of_neighbors, cfg.exhaustive)
