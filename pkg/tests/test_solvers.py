from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from evita.instance import Instance, distance_matrix
from evita.logistics import ConfigError, VehicleConfig
from evita.routing import DEPOT, make_plan, plan_is_feasible
from evita.solvers import ACO, CW, CWLS, CWTS, make_solver
from evita.solvers.aco import (
    AcoParams,
    AntState,
    aco_solve,
    decay_parameter,
    heuristic_matrix,
    transition,
    update_pheromones_local,
    update_pheromones_posteriori,
    valid_random_solution,
)
from evita.solvers.cw import clarke_wright, cwls_solve, savings
from evita.solvers.tabu import (
    EXTRACT,
    INTER,
    INTRA,
    Move,
    SearchStalled,
    TabuConfig,
    TabuList,
    best_neighbour,
    cwts_solve,
)
from oracles import exact_vrp, random_micro_instance

VC = VehicleConfig()
FAST_ACO = AcoParams(n_iters=8, n_ants=6)


def layout(*pts):
    return distance_matrix(Instance("t", np.array([[0.0, 0.0], *pts], dtype=float)))


def micro(seed, n, scale=100.0):
    rng = np.random.default_rng(seed)
    inst, dem = random_micro_instance(rng, n, scale)
    return list(range(1, n + 1)), dem, distance_matrix(inst)


def covers(plan, shops):
    return Counter(plan.shops) == Counter(shops)


# -- Clarke & Wright -------------------------------------------------------------------


def test_collinear_shops_merge():
    D = layout((10, 0), (20, 0))
    assert savings([1, 2], D)[0] == (20.0, 1, 2)
    plan = clarke_wright([1, 2], {1: 1, 2: 1}, D, VC)
    assert len(plan.routes) == 1 and plan.total_distance == 40.0


def test_antipodal_shops_stay_apart():
    D = layout((10, 0), (-10, 0))
    assert savings([1, 2], D)[0][0] == 0.0
    assert len(clarke_wright([1, 2], {1: 1, 2: 1}, D, VC).routes) == 2


def test_capacity_blocks_merge():
    D = layout((10, 0), (20, 0))
    assert len(clarke_wright([1, 2], {1: 7, 2: 6}, D, VC).routes) == 2


@given(st.integers(0, 10**6), st.integers(1, 12))
def test_savings_recomputed(seed, n):
    shops, _, D = micro(seed, n)
    got = {(i, j): v for v, i, j in savings(shops, D)}
    assert len(got) == n * (n - 1)
    for i in shops:
        for j in shops:
            if i != j:
                assert got[i, j] == D[i, 0] + D[0, j] - D[i, j]
    vals = [v for v, _, _ in savings(shops, D)]
    assert vals == sorted(vals, reverse=True)


@given(st.integers(0, 10**6), st.integers(1, 25), st.sampled_from([100.0, 160.0]))
def test_cw_cover_feasible_deterministic(seed, n, scale):
    shops, dem, D = micro(seed, n, scale)
    plan = clarke_wright(shops, dem, D, VC)
    assert covers(plan, shops) and plan_is_feasible(plan, VC)
    assert clarke_wright(shops, dem, D, VC) == plan
    ls = cwls_solve(shops, dem, D, VC, np.random.default_rng(seed))
    assert covers(ls, shops) and plan_is_feasible(ls, VC)
    assert ls.total_distance <= plan.total_distance + 1e-9
    assert cwls_solve(shops, dem, D, VC, np.random.default_rng(seed)) == ls


def test_cwls_singleton_day_equals_cw():
    D = layout((3, 4))
    assert cwls_solve([1], {1: 2}, D, VC, np.random.default_rng(0)) == clarke_wright([1], {1: 2}, D, VC)


@pytest.mark.parametrize("seed", range(5))
def test_cw_six_shops_against_oracle(seed):
    shops, dem, D = micro(seed, 6)
    opt, _ = exact_vrp(shops, dem, D, VC)
    cw = clarke_wright(shops, dem, D, VC).total_distance
    ls = cwls_solve(shops, dem, D, VC, np.random.default_rng(seed)).total_distance
    assert opt - 1e-9 <= ls <= cw + 1e-9


# -- ACO ----------------------------------------------------------------------------------


def test_local_deposit():
    D = layout((2, 0), (2, 3))
    tau = np.full((3, 3), 0.5)
    update_pheromones_local(tau, [(0, 1)], D)
    assert tau[0, 1] == tau[1, 0] == 1.0
    assert tau[1, 2] == tau[0, 2] == 0.5


def test_local_deposit_full_tour():
    D = layout((3, 0), (3, 4), (0, 4))
    tau = np.full((4, 4), 0.5)
    arcs = [(0, 1), (1, 2), (2, 3), (3, 0)]
    update_pheromones_local(tau, arcs, D)
    expect = np.full((4, 4), 0.5)
    for a, b in arcs:
        expect[a, b] += 1 / D[a, b]
        expect[b, a] += 1 / D[a, b]
    assert np.allclose(tau, expect, rtol=0, atol=1e-15)


def test_local_deposit_skips_zero_length():
    D = layout((0, 0))
    tau = np.full((2, 2), 0.5)
    update_pheromones_local(tau, [(0, 1)], D)
    assert (tau == 0.5).all()


def test_posteriori_examples():
    tau = np.ones((3, 3))
    update_pheromones_posteriori(tau, [(0, 1)], [], 50.0, 1.0, 0.5)
    assert tau[0, 1] == 1.0
    tau = np.full((3, 3), 7.0)
    update_pheromones_posteriori(tau, [], [(1, 2)], 50.0, 1.0, 0.5)
    assert tau[1, 2] == tau[2, 1] == 0.5
    tau = np.full((3, 3), 2.0)
    update_pheromones_posteriori(tau, [(0, 1), (1, 0)], [], 100.0, 0.5, 0.5)
    assert tau[0, 1] == tau[1, 0] == pytest.approx(1.01, abs=1e-12)


def test_posteriori_overlap_reinforced_from_reset():
    tau = np.full((3, 3), 4.0)
    update_pheromones_posteriori(tau, [(0, 1)], [(1, 0), (1, 2)], 10.0, 0.5, 0.5)
    assert tau[0, 1] == pytest.approx(0.5 * (0.5 + 0.05))
    assert tau[1, 2] == 0.5


def test_decay():
    assert decay_parameter(0.8, 0.1) == pytest.approx(0.76)
    assert decay_parameter(0.1, 0.1) == 0.1
    x = 0.8
    seq = []
    for _ in range(50):
        x = decay_parameter(x, 0.1)
        seq.append(x)
    assert x == 0.1
    assert all(a >= b >= 0.1 for a, b in zip(seq, seq[1:]))


@given(st.floats(0.01, 1.0), st.floats(0.001, 1.0))
def test_decay_property(x, floor):
    y = decay_parameter(x, floor)
    assert y >= floor and (y <= x or y == floor)


def ant(pos, todo, time=8.0, load=12):
    return AntState(pos, list(todo), remaining_time=time, remaining_load=load)


def test_transition_singleton_any_p():
    D = layout((3, 4), (6, 8))
    tau = np.full((3, 3), 0.5)
    for p in (0.0, 0.5, 1.0):
        for s in range(5):
            assert transition(ant(0, [2]), tau, D, {1: 1, 2: 1}, VC, p, np.random.default_rng(s)) == 2


def test_transition_load_guard():
    D = layout((3, 4), (6, 8))
    tau = np.full((3, 3), 0.5)
    a = ant(1, [2], load=1)
    assert transition(a, tau, D, {1: 1, 2: 5}, VC, 1.0, np.random.default_rng(0)) == DEPOT


def test_transition_time_guard():
    D = layout((3, 4), (6, 8))
    tau = np.full((3, 3), 0.5)
    # reach 2 (5 km) and return (10 km) at 60 km/h plus unloading: 0.5 h
    assert transition(ant(1, [2], time=0.5), tau, D, {1: 1, 2: 1}, VC, 1.0, np.random.default_rng(0)) == 2
    assert transition(ant(1, [2], time=0.49), tau, D, {1: 1, 2: 1}, VC, 1.0, np.random.default_rng(0)) == DEPOT


@given(st.integers(0, 10**6))
def test_transition_greedy_matches_bruteforce(seed):
    shops, dem, D = micro(seed, 5)
    tau = np.full(D.shape, 0.5)
    rng = np.random.default_rng(seed)
    i = int(rng.integers(1, 6))
    todo = [s for s in shops if s != i]
    score = {j: 0.5**0.2 * (1 / D[i, j]) ** 0.8 * (D[i, 0] + D[0, j] - D[i, j]) ** 0.3 for j in todo}
    expect = max(todo, key=lambda j: (score[j], -j))
    got = transition(ant(i, todo), tau, D, dem, VC, 1.0, rng)
    assert got == expect


@given(st.integers(0, 10**6))
def test_transition_gamma_zero_nearest(seed):
    shops, dem, D = micro(seed, 5)
    tau = np.full(D.shape, 0.5)
    i = 2
    todo = [s for s in shops if s != i]
    nearest = min(todo, key=lambda j: (D[i, j], j))
    got = transition(ant(i, todo), tau, D, dem, VC, 1.0, np.random.default_rng(seed), gamma=0.0)
    assert got == nearest


def test_heuristic_depot_row_has_no_savings_term():
    D = layout((3, 4), (6, 8))
    h = heuristic_matrix(np.asarray(D), 0.8, 0.3)
    assert h[0, 1] == pytest.approx((1 / 5) ** 0.8)
    assert h[1, 2] == pytest.approx((1 / 5) ** 0.8 * 10.0**0.3)  # saving 5 + 10 - 5


def test_aco_one_shop():
    D = layout((3, 4))
    plan = aco_solve([1], {1: 2}, D, VC, FAST_ACO, np.random.default_rng(0))
    assert plan.sequences() == [[1]] and plan.total_distance == 10.0


def test_aco_params_validated():
    with pytest.raises(ConfigError):
        AcoParams(rho_min=0.5, rho0=0.2)
    with pytest.raises(ConfigError):
        AcoParams(n_ants=0)


@given(st.integers(0, 10**6), st.integers(2, 12), st.sampled_from([100.0, 160.0]))
def test_aco_run_invariants(seed, n, scale):
    shops, dem, D = micro(seed, n, scale)
    trace = []
    plan = aco_solve(shops, dem, D, VC, FAST_ACO, np.random.default_rng(seed), trace)
    assert covers(plan, shops) and plan_is_feasible(plan, VC)
    bests = [t["best"] for t in trace]
    assert all(a >= b - 1e-12 for a, b in zip(bests, bests[1:]))
    assert plan.total_distance == pytest.approx(bests[-1])
    assert all(t["min_tau"] > 0 for t in trace)
    assert all(t["rho"] >= FAST_ACO.rho_min and t["p"] >= FAST_ACO.p_min for t in trace)
    for t in trace:
        for p in t["plans"]:
            assert plan_is_feasible(p, VC) and sorted(p.shops) == list(range(1, n + 1))
    initial = valid_random_solution(shops, dem, D.tolist(), VC, np.random.default_rng(seed))
    assert plan.total_distance <= make_plan(initial, dem, D, VC).total_distance + 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_aco_five_shops_against_oracle(seed):
    shops, dem, D = micro(seed, 5)
    opt, _ = exact_vrp(shops, dem, D, VC)
    plan = aco_solve(shops, dem, D, VC, AcoParams(), np.random.default_rng(seed))
    initial = valid_random_solution(shops, dem, D.tolist(), VC, np.random.default_rng(seed))
    assert opt - 1e-9 <= plan.total_distance <= make_plan(initial, dem, D, VC).total_distance + 1e-9


def test_aco_deterministic_given_seed():
    shops, dem, D = micro(4, 8)
    a = aco_solve(shops, dem, D, VC, FAST_ACO, np.random.default_rng(9))
    b = aco_solve(shops, dem, D, VC, FAST_ACO, np.random.default_rng(9))
    assert a == b


# -- tabu search -------------------------------------------------------------------------


def test_tabu_list_tenure():
    t = TabuList()
    m = Move(INTRA, 1, 2)
    t.add(m, 3)
    for _ in range(2):
        t.tick()
        assert m in t
    t.tick()
    assert m not in t and len(t) == 0
    t.add(m, 3)
    t.add(m, 3)
    assert t.entries[m] == 3


def test_two_shop_neighbourhood():
    D = layout((10, 0), (0, 10))
    dem = {1: 1, 2: 1}
    plan = make_plan([[1, 2]], dem, D, VC)
    costs = {
        Move(INTRA, 1, 2): make_plan([[2, 1]], dem, D, VC).total_distance,
        Move(EXTRACT, 1): make_plan([[2], [1]], dem, D, VC).total_distance,
        Move(EXTRACT, 2): make_plan([[1], [2]], dem, D, VC).total_distance,
    }
    nb, move = best_neighbour(plan, TabuList(), 0.0, dem, D, VC)
    assert move in costs and nb.total_distance == pytest.approx(min(costs.values()))


def test_capacity_breaking_swaps_never_chosen():
    # swapping 3 with 1 or 2 would be much shorter but overloads the first route
    D = layout((10, 0), (0, 50), (11, 0), (0, 51))
    dem = {1: 6, 2: 6, 3: 7, 4: 1}
    plan = make_plan([[1, 2], [3, 4]], dem, D, VC)
    nb, move = best_neighbour(plan, TabuList(), 0.0, dem, D, VC)
    assert plan_is_feasible(nb, VC)
    assert move not in (Move(INTER, 1, 3), Move(INTER, 2, 3))


def test_full_routes_admit_no_cross_swap():
    # both routes full: every cross swap overloads one side, so extraction or intra reversal remain
    D = layout((10, 0), (11, 0), (0, 10))
    dem = {1: 6, 2: 6, 3: 12}
    plan = make_plan([[1, 2], [3]], dem, D, VC)
    nb, move = best_neighbour(plan, TabuList(), 0.0, dem, D, VC)
    assert move.kind in (EXTRACT, INTRA) and plan_is_feasible(nb, VC)


def test_aspiration_admits_tabu_move():
    D = layout((10, 0), (0, 10))
    dem = {1: 1, 2: 1}
    plan = make_plan([[1, 2]], dem, D, VC)
    tabu = TabuList()
    for m in (Move(INTRA, 1, 2), Move(EXTRACT, 1), Move(EXTRACT, 2)):
        tabu.add(m, 12)
    with pytest.raises(SearchStalled):
        best_neighbour(plan, tabu, 0.0, dem, D, VC)
    nb, move = best_neighbour(plan, tabu, 1e9, dem, D, VC)
    assert move in tabu


def brute_neighbours(plan, dem, D):
    seqs = plan.sequences()
    where = {s: (ri, p) for ri, r in enumerate(seqs) for p, s in enumerate(r)}
    shops = sorted(where)
    for x, i in enumerate(shops):
        for j in shops[x + 1:]:
            new = [list(r) for r in seqs]
            (r1, p), (r2, q) = where[i], where[j]
            new[r1][p], new[r2][q] = j, i
            yield make_plan(new, dem, D, VC)
    for i in shops:
        ri, p = where[i]
        if len(seqs[ri]) > 1:
            new = [list(r) for r in seqs]
            new[ri].pop(p)
            yield make_plan(new + [[i]], dem, D, VC)


@given(st.integers(0, 10**6), st.integers(2, 8), st.sampled_from([100.0, 160.0]))
def test_first_iteration_is_steepest_descent(seed, n, scale):
    shops, dem, D = micro(seed, n, scale)
    plan = clarke_wright(shops, dem, D, VC)
    feas = [p.total_distance for p in brute_neighbours(plan, dem, D) if plan_is_feasible(p, VC)]
    if not feas:
        with pytest.raises(SearchStalled):
            best_neighbour(plan, TabuList(), 0.0, dem, D, VC)
        return
    nb, _ = best_neighbour(plan, TabuList(), 0.0, dem, D, VC)
    assert nb.total_distance == pytest.approx(min(feas), abs=1e-9)


@given(st.integers(0, 10**6), st.integers(1, 14), st.sampled_from([100.0, 160.0]))
def test_cwts_invariants(seed, n, scale):
    shops, dem, D = micro(seed, n, scale)
    cfg = TabuConfig()
    trace = []
    plan = cwts_solve(shops, dem, D, VC, cfg, trace=trace)
    seed_plan = clarke_wright(shops, dem, D, VC)
    assert plan.total_distance <= seed_plan.total_distance + 1e-9
    assert covers(plan, shops) and plan_is_feasible(plan, VC)
    bests = [t["best"] for t in trace]
    assert all(a >= b for a, b in zip(bests, bests[1:]))
    for t in trace:
        assert all(1 <= v <= cfg.tenure for v in t["tabu"].values())
        assert plan_is_feasible(t["plan"], VC) and covers(t["plan"], shops)
    if trace:
        assert plan.total_distance == pytest.approx(bests[-1])


def test_cwts_one_shop_returns_seed():
    D = layout((3, 4))
    assert cwts_solve([1], {1: 1}, D, VC) == clarke_wright([1], {1: 1}, D, VC)


@pytest.mark.parametrize("seed", range(5))
def test_cwts_six_shops_against_oracle(seed):
    shops, dem, D = micro(seed, 6)
    opt, _ = exact_vrp(shops, dem, D, VC)
    cw = clarke_wright(shops, dem, D, VC).total_distance
    assert opt - 1e-9 <= cwts_solve(shops, dem, D, VC).total_distance <= cw + 1e-9


# -- solver handles -----------------------------------------------------------------------


def test_make_solver():
    assert isinstance(make_solver("cwls"), CWLS)
    assert isinstance(make_solver("ACO"), ACO)
    assert isinstance(make_solver("CWTS"), CWTS)
    assert isinstance(make_solver("CW"), CW)
    with pytest.raises(ValueError):
        make_solver("GA")


def test_solver_handles_pickle():
    import pickle

    for name in ("CWLS", "ACO", "CWTS", "CW"):
        s = make_solver(name)
        assert pickle.loads(pickle.dumps(s)) == s
