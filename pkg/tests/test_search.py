import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from parkplan.errors import BoundsError, EmptyError, InternalError, PathNotFound, StartBlockedError
from parkplan.gridmap import OccupancyGrid, TraversabilityMatrix, inflate_eager
from parkplan.maps import load_bundled_map
from parkplan.search import (HeapOpenList, LinearOpenList, SearchConfig, euclid, path_cost, plan,
                             pop_min, reconstruct, score)

import oracles

UNI = "improved_unidirectional"
BI = "improved_bidirectional"


def legal_of(occ, radius):
    return oracles.eager_matrix(occ, radius) == 1


def solvable_instance(rng, radius=0, max_side=50, density=0.25):
    """Random grid with start/goal that the oracle says are connected."""
    while True:
        w, h = rng.integers(8, max_side + 1, size=2)
        occ = oracles.random_grid(rng, w, h, density)
        legal = legal_of(occ, radius)
        free = np.argwhere(legal)
        if len(free) < 2:
            continue
        (r0, c0), (r1, c1) = free[rng.choice(len(free), 2, replace=False)]
        start, goal = (int(c0), int(r0)), (int(c1), int(r1))
        cost = oracles.dijkstra(legal, start, goal)
        if math.isfinite(cost):
            return occ, legal, start, goal, cost


def run(occ, radius, start, goal, cfg, **kw):
    g = OccupancyGrid.from_array(occ)
    m = TraversabilityMatrix.for_grid(g, radius)
    return plan(g, m, start, goal, cfg, **kw)


def test_euclid_examples():
    assert euclid((0, 0), (0, 0)) == 0
    assert euclid((0, 0), (3, 4)) == 5
    assert euclid((2, 1), (5, 5)) == 5
    assert euclid((0, 0), (3, 4), 0.5) == 2.5


def test_score_examples():
    cfg = SearchConfig(w_far=2.0, w_near=0.8, offset_p=0.001, near_threshold=5)
    assert score((3, 3), (3, 3), 7.0, cfg) == 7.0
    assert score((0, 0), (6, 8), 2.0, cfg) == pytest.approx(22.01, abs=1e-12)
    assert score((0, 0), (0, 4), 2.0, cfg) == pytest.approx(5.204, abs=1e-12)


@pytest.mark.parametrize("kw", [dict(w_far=0.9), dict(w_near=1.2), dict(w_near=0.0),
                                dict(offset_p=0.01), dict(offset_p=-1e-3), dict(near_threshold=-1),
                                dict(connectivity=6), dict(mode="fast")])
def test_config_invariants(kw):
    with pytest.raises(ValueError):
        SearchConfig(**kw)


@pytest.mark.parametrize("cls", [HeapOpenList, LinearOpenList])
def test_open_list_examples(cls):
    ol = cls()
    for f in (3.0, 1.0, 2.0):
        ol.push(f, (int(f), 0))
    assert pop_min(ol).f == 1.0
    ol = cls()
    ol.push(1.0, "a")
    ol.push(1.0, "b")
    assert pop_min(ol).seq == 1
    pop_min(ol)
    with pytest.raises(EmptyError):
        pop_min(ol)


def test_thousand_pushes_sorted(rng):
    ol = HeapOpenList()
    fs = rng.random(1000)
    for i, f in enumerate(fs):
        ol.push(float(f), i)
    assert [pop_min(ol).f for _ in range(1000)] == sorted(fs.tolist())


@given(st.lists(st.one_of(st.none(), st.integers(0, 20)), max_size=200))
def test_heap_matches_linear_scan(ops):
    heap, lin, oracle = HeapOpenList(), LinearOpenList(), oracles.LinearScanQueue()
    for i, op in enumerate(ops):
        if op is None:
            if not len(oracle):
                continue
            want = oracle.pop()
            for ol in (heap, lin):
                n = pop_min(ol)
                assert (n.f, n.seq, n.cell) == want
        else:
            for ol in (heap, lin):
                ol.push(float(op), i)
            oracle.push(float(op), i)


def test_reconstruct_examples():
    s = (0, 0)
    assert reconstruct(s, {s: None}, {s: None}) == [s]
    a, m, b, g = (1, 0), (2, 0), (3, 0), (4, 0)
    p1 = {s: None, a: s, m: a}
    p2 = {g: None, b: g, m: b}
    assert reconstruct(m, p1, p2) == [s, a, m, b, g]
    assert reconstruct(m, p1) == [s, a, m]
    with pytest.raises(InternalError):
        reconstruct(m, {m: a})
    with pytest.raises(InternalError):
        reconstruct(m, {m: a, a: m})


def test_empty_grid_diagonal():
    occ = np.zeros((5, 5), bool)
    res = run(occ, 0, (0, 0), (4, 4), SearchConfig.constant(1.0))
    assert res.reached_goal
    assert res.cost == pytest.approx(4 * math.sqrt(2), abs=1e-12)
    assert res.cost == oracles.dijkstra(~occ, (0, 0), (4, 4))


@pytest.mark.parametrize("mode", ["baseline", UNI, BI])
def test_start_equals_goal(mode):
    occ = np.zeros((5, 5), bool)
    g = OccupancyGrid.from_array(occ)
    res = plan(g, TraversabilityMatrix.for_grid(g, 0), (2, 2), (2, 2), SearchConfig(mode=mode))
    assert res.path == [(2, 2)] and res.cost == 0 and res.reached_goal


def test_errors():
    occ = np.zeros((5, 5), bool)
    occ[0, 0] = True
    g = OccupancyGrid.from_array(occ)
    m = TraversabilityMatrix.for_grid(g, 0)
    with pytest.raises(StartBlockedError):
        plan(g, m, (0, 0), (4, 4), SearchConfig())
    with pytest.raises(BoundsError):
        plan(g, m, (1, 1), (5, 4), SearchConfig())
    with pytest.raises(BoundsError):
        plan(g, m, (-1, 1), (4, 4), SearchConfig())
    with pytest.raises(ValueError):
        plan(g, None, (1, 1), (4, 4), SearchConfig())
    occ = np.zeros((3, 5), bool)
    occ[:, 2] = True
    g = OccupancyGrid.from_array(occ)
    with pytest.raises(PathNotFound):
        plan(g, None, (0, 1), (4, 1), SearchConfig(mode="baseline"))


def test_optimal_at_unit_weight(rng):
    for _ in range(25):
        radius = int(rng.integers(0, 2))
        occ, legal, s, g, cost = solvable_instance(rng, radius, max_side=30)
        res = run(occ, radius, s, g, SearchConfig.constant(1.0))
        assert res.reached_goal and res.cost == cost
        assert oracles.path_is_valid(res.path, legal, s, g)


def test_weighted_bound(rng):
    for _ in range(25):
        occ, legal, s, g, cost = solvable_instance(rng, 0, max_side=30)
        for w in (1.5, 2.0):
            res = run(occ, 0, s, g, SearchConfig.constant(w))
            assert res.reached_goal and res.cost <= w * cost + 1e-9


def test_bidirectional_soundness(rng):
    for _ in range(40):
        radius = int(rng.integers(0, 2))
        occ, legal, s, g, _ = solvable_instance(rng, radius, max_side=30)
        res = run(occ, radius, s, g, SearchConfig(mode=BI))
        assert res.reached_goal
        assert oracles.path_is_valid(res.path, legal, s, g)
        assert res.cost == path_cost(res.path)


def test_baseline_is_point_robot(rng):
    for _ in range(15):
        occ, _, s, g, _ = solvable_instance(rng, 0, max_side=25)
        legal = ~occ
        res = plan(OccupancyGrid.from_array(occ), None, s, g, SearchConfig(mode="baseline"))
        # the baseline may cut corners, so compare against a corner-cutting oracle
        assert res.cost == oracles.dijkstra(legal, s, g, no_cut=False)
        assert oracles.path_is_valid(res.path, legal, s, g, no_cut=False)


def test_heap_and_linear_expand_identically(rng):
    for _ in range(15):
        radius = int(rng.integers(0, 2))
        occ, _, s, g, _ = solvable_instance(rng, radius, max_side=25)
        traces = []
        for ol in ("heap", "linear"):
            t = []
            run(occ, radius, s, g, SearchConfig(mode=UNI), open_list=ol, trace=t)
            traces.append(t)
        assert traces[0] == traces[1]


def _distinct_f_instance(occ, s, g):
    """True when no two pushes of the p = 0 search share an f value."""
    fs = []
    orig = HeapOpenList.push

    def spy(self, f, *a, **k):
        fs.append(f)
        return orig(self, f, *a, **k)
    HeapOpenList.push = spy
    try:
        res = run(occ, 0, s, g, SearchConfig.constant(1.3))
    finally:
        HeapOpenList.push = orig
    return len(set(fs)) == len(fs), res


def test_offset_keeps_path_when_f_distinct():
    rnd = random.Random(1)
    checked = 0
    for _ in range(200):
        w, h = rnd.randint(6, 14), rnd.randint(6, 14)
        occ = np.array([[rnd.random() < 0.25 for _ in range(w)] for _ in range(h)])
        free = [(c, r) for r in range(h) for c in range(w) if not occ[r, c]]
        if len(free) < 2:
            continue
        s, g = rnd.sample(free, 2)
        distinct, base = _distinct_f_instance(occ, s, g)
        if not distinct or not base.reached_goal:
            continue
        with_p = run(occ, 0, s, g, SearchConfig.constant(1.3, offset_p=0.001))
        assert with_p.path == base.path
        checked += 1
    assert checked >= 5


def test_fallback_dominance(rng):
    checked = 0
    for _ in range(60):
        occ = oracles.random_grid(rng, 20, 20, 0.3)
        occ[:, 10] = True                    # wall: right half unreachable from the left
        legal = ~occ
        left = np.argwhere(legal[:, :10])
        right = np.argwhere(occ[:, 11:])
        if not len(left) or not len(right):
            continue
        r0, c0 = left[rng.integers(len(left))]
        r1, c1 = right[rng.integers(len(right))]
        start, goal = (int(c0), int(r0)), (int(c1) + 11, int(r1))
        trace = []
        res = run(occ, 0, start, goal, SearchConfig(mode=BI), trace=trace)
        assert not res.reached_goal and res.path
        assert oracles.path_is_valid(res.path, legal, start)
        end = res.path[-1]
        best = min(euclid(c, goal) for c in trace)
        assert euclid(end, goal) == best
        checked += 1
    assert checked > 20


def test_bundled_scenarios():
    grid = load_bundled_map()
    m = TraversabilityMatrix.for_grid(grid, 3)
    res = plan(grid, m, (95, 85), (109, 133), SearchConfig())
    assert res.reached_goal and res.path[-1] == (109, 133)
    assert oracles.path_is_valid(res.path, inflate_eager(grid, 3).states == 1, (95, 85), (109, 133))
    m = TraversabilityMatrix.for_grid(grid, 3)
    trace = []
    res = plan(grid, m, (95, 85), (109, 117), SearchConfig(), trace=trace)
    assert not res.reached_goal
    assert euclid(res.path[-1], (109, 117)) == min(euclid(c, (109, 117)) for c in trace)
    with pytest.raises(PathNotFound):
        plan(grid, None, (95, 85), (109, 117), SearchConfig(mode="baseline"))


def test_stats_and_lazy_scans():
    grid = load_bundled_map()
    m = TraversabilityMatrix.for_grid(grid, 3)
    res = plan(grid, m, (95, 85), (109, 133), SearchConfig())
    assert 0 < res.stats["disc_scans"] < grid.width * grid.height / 10
    assert res.stats["expansions"] > 0
