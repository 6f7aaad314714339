import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from evita.instance import Instance, distance_matrix
from evita.logistics import VehicleConfig
from evita.routing import (
    DayPlan,
    Route,
    check_singletons,
    InfeasibleInstanceError,
    is_feasible,
    local_search,
    make_plan,
    plan_is_feasible,
    route_metrics,
    split_route,
    swap_delta_inter,
    swap_delta_intra,
    route_distance,
)
from evita.solvers.aco import valid_random_solution
from oracles import random_micro_instance

VC = VehicleConfig()


def line_dm(*xs):
    pts = np.array([[0.0, 0.0]] + [[x, 0.0] for x in xs])
    return distance_matrix(Instance("line", pts))


def test_route_metrics_single_shop():
    r = route_metrics([1], {1: 2}, line_dm(30.0), VC)
    assert r == Route((1,), 2, 60.0, 1.25)


def test_route_metrics_empty():
    r = route_metrics([], {}, line_dm(1.0), VC)
    assert (r.load, r.distance, r.duration) == (0, 0.0, 0.0)


def test_route_metrics_square():
    # depot (0,0), shops at (0,10), (10,10), (10,0)
    pts = np.array([[0, 0], [0, 10], [10, 10], [10, 0]], dtype=float)
    r = route_metrics([1, 2, 3], {1: 1, 2: 2, 3: 3}, distance_matrix(Instance("sq", pts)), VC)
    assert r.distance == 40.0 and r.load == 6
    assert r.duration == 40.0 / 60.0 + 0.75


def test_is_feasible_examples():
    assert not is_feasible(Route((1,), 13, 10.0, 0.5), VC)
    assert is_feasible(route_metrics([1, 2], {1: 1, 2: 1}, line_dm(10.0, 30.0), VC), VC)
    zero = distance_matrix(Instance("z", np.zeros((34, 2))))
    r = route_metrics(list(range(1, 34)), {s: 0 for s in range(1, 34)}, zero, VC)
    assert r.duration == 8.25 and not is_feasible(r, VC)


def test_check_singletons_names_shop():
    with pytest.raises(InfeasibleInstanceError, match="shop 2"):
        check_singletons([1, 2], {1: 1, 2: 1}, line_dm(10.0, 300.0).tolist(), VC)


def test_split_route():
    D = line_dm(10, 20, 30, 40, 50).tolist()
    dem = {s: 5 for s in range(1, 6)}
    assert split_route([1, 2], dem, D, VC) == [[1, 2]]
    assert split_route([1, 2, 3], dem, D, VC) == [[1, 2], [3]]
    assert split_route([1, 2, 3, 4], dem, D, VC) == [[1, 2], [3, 4]]
    assert split_route([1, 2, 3, 4, 5], dem, D, VC) is None  # tail still over capacity


@given(st.integers(0, 10**6), st.integers(2, 9))
def test_swap_deltas_match_recomputation(seed, n):
    rng = np.random.default_rng(seed)
    inst, _ = random_micro_instance(rng, n)
    D = distance_matrix(inst).tolist()
    r = list(rng.permutation(np.arange(1, n + 1)))
    p, q = (int(x) for x in rng.choice(n, 2, replace=False))
    s = list(r)
    s[p], s[q] = s[q], s[p]
    assert swap_delta_intra(r, p, q, D) == pytest.approx(route_distance(s, D) - route_distance(r, D), abs=1e-9)
    k = int(rng.integers(1, n))
    r1, r2 = r[:k], r[k:]
    a, b = int(rng.integers(len(r1))), int(rng.integers(len(r2)))
    n1, n2 = list(r1), list(r2)
    n1[a], n2[b] = n2[b], n1[a]
    d1, d2 = swap_delta_inter(r1, a, r2, b, D)
    assert d1 == pytest.approx(route_distance(n1, D) - route_distance(r1, D), abs=1e-9)
    assert d2 == pytest.approx(route_distance(n2, D) - route_distance(r2, D), abs=1e-9)


def random_plan(seed, n, scale=100.0):
    rng = np.random.default_rng(seed)
    inst, dem = random_micro_instance(rng, n, scale)
    D = distance_matrix(inst)
    routes = valid_random_solution(list(range(1, n + 1)), dem, D.tolist(), VC, rng)
    return make_plan(routes, dem, D, VC), dem, D


@given(st.integers(0, 10**6), st.integers(1, 14), st.sampled_from([100.0, 160.0]),
       st.booleans(), st.integers(1, 20))
def test_local_search_invariants(seed, n, scale, exhaustive, neighbours):
    plan, dem, D = random_plan(seed, n, scale)
    out = local_search(plan, dem, D, VC, np.random.default_rng(seed), neighbours, exhaustive)
    assert out.total_distance <= plan.total_distance + 1e-9
    assert Counter(out.shops) == Counter(plan.shops)
    assert plan_is_feasible(out, VC)
    for r in out.routes:
        assert r.duration == r.distance / VC.speed + len(r) * VC.unload_time


@given(st.integers(0, 10**6), st.integers(2, 10))
def test_local_search_fixed_point(seed, n):
    plan, dem, D = random_plan(seed, n)
    opt = local_search(plan, dem, D, VC, np.random.default_rng(0), exhaustive=True)
    again = local_search(opt, dem, D, VC, np.random.default_rng(seed))
    assert again.sequences() == opt.sequences()


def single_swaps(plan, dem, D):
    """Every feasible plan one 2-interchange (no repair) away from ``plan``."""
    seqs = plan.sequences()
    pos = [(ri, p) for ri, r in enumerate(seqs) for p in range(len(r))]
    for (r1, p), (r2, q) in itertools.combinations(pos, 2):
        new = [list(r) for r in seqs]
        new[r1][p], new[r2][q] = new[r2][q], new[r1][p]
        cand = make_plan(new, dem, D, VC)
        if plan_is_feasible(cand, VC):
            yield cand


@given(st.integers(0, 10**6))
def test_exhaustive_at_least_best_single_swap(seed):
    plan, dem, D = random_plan(seed, 5)
    best = min([c.total_distance for c in single_swaps(plan, dem, D)] + [plan.total_distance])
    out = local_search(plan, dem, D, VC, np.random.default_rng(seed), exhaustive=True)
    assert out.total_distance <= best + 1e-9


def test_crossing_route_uncrossed():
    pts = np.array([[0, 0], [0, 10], [10, 10], [10, 0], [0, 20]], dtype=float)
    D = distance_matrix(Instance("x", pts))
    dem = {s: 1 for s in range(1, 5)}
    plan = make_plan([[1, 3, 2, 4]], dem, D, VC)
    out = local_search(plan, dem, D, VC, np.random.default_rng(1), exhaustive=True)
    assert out.total_distance < plan.total_distance


def test_local_search_repairs_by_splitting():
    # swapping 4 into the first route breaks capacity; the split keeps it feasible and shorter
    D = line_dm(10, 11, 50, 12)
    dem = {1: 6, 2: 5, 3: 1, 4: 6}
    plan = make_plan([[1, 2], [3, 4]], dem, D, VC)
    out = local_search(plan, dem, D, VC, np.random.default_rng(0), exhaustive=True)
    assert plan_is_feasible(out, VC)
    assert out.total_distance <= plan.total_distance


def test_empty_plan():
    assert local_search(DayPlan(), {}, line_dm(1.0), VC, np.random.default_rng(0)) == DayPlan()
