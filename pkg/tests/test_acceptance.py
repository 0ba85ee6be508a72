"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from parkplan import bench
from parkplan.errors import PathNotFound
from parkplan.geometry import box
from parkplan.gridmap import OccupancyGrid, TraversabilityMatrix, inflate_eager, traversable
from parkplan.guess import arc_line_guess
from parkplan.maps import load_bundled_map
from parkplan.optimizer import (ParkingProblem, _Model, dual_margins, dual_norm_residual,
                                solve_parking, verify_trajectory)
from parkplan.search import HeapOpenList, SearchConfig, euclid, plan, pop_min
from parkplan.smooth import bspline_basis, clamped_uniform_knots, eval_bezier, eval_bspline
from parkplan.vehicle import VehicleParams, VehicleState, footprint, step

import oracles
from test_search import run, solvable_instance
from test_smooth import span_hull_ok

P = VehicleParams()
RESULTS = {}


def verdict(name, ok, detail=""):
    line = f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else "")
    RESULTS[name] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def danger():
    t0 = time.perf_counter()
    rows = bench.run_danger_suite()
    return rows, time.perf_counter() - t0


@pytest.fixture(scope="module")
def smoke_and_b():
    out = {}
    prob = ParkingProblem([0, 0, 0, 0], [10, 0, 0, 0], 40, 0.25, [], P)
    guess = arc_line_guess((0, 0, 0), (10, 0, 0), 5.0, 41, 0.25, P, "forward")
    out["straight"] = (prob, solve_parking(prob, guess))
    scn = bench.load_scenario("danger_B")
    prob = scn.problem()
    out["danger_B"] = (prob, solve_parking(prob, bench.geometric_plan(scn)))
    return out


def test_c01_speedup():
    t0 = time.perf_counter()
    res = bench.run_timing_suite(bench.load_scenario("vertical"), runs=5)
    elapsed = time.perf_counter() - t0
    grid = load_bundled_map()
    ratio = bench.speedup_ratio(res["improved"].timings, res["baseline"].timings)
    ok = ratio <= 0.10 and elapsed < 60 and grid.width >= 200 and grid.height >= 200 \
        and grid.cells.mean() >= 0.40
    verdict("C01 speedup", ok, f"ratio {ratio:.4f}, occupancy {grid.cells.mean():.2f}, "
                               f"benchmark {elapsed:.1f} s")


def test_c02_optimal_at_unit_weight():
    rng = np.random.default_rng(2)
    bad = 0
    for _ in range(100):
        occ, legal, s, g, cost = solvable_instance(rng, 0, max_side=50)
        res = run(occ, 0, s, g, SearchConfig.constant(1.0, offset_p=0.0))
        bad += not (res.reached_goal and res.cost == cost and oracles.path_is_valid(res.path, legal, s, g))
    verdict("C02 w=1 equals Dijkstra", bad == 0, f"{bad}/100 mismatches")


def test_c03_weighted_bound():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        occ, legal, s, g, cost = solvable_instance(rng, 0, max_side=50)
        for w in (1.5, 2.0):
            res = run(occ, 0, s, g, SearchConfig.constant(w))
            assert res.reached_goal and oracles.path_is_valid(res.path, legal, s, g)
            worst = max(worst, res.cost / (w * cost) if cost else 0.0)
    verdict("C03 cost <= w * Dijkstra", worst <= 1 + 1e-12, f"max cost/(w*opt) {worst:.4f}")


def test_c04_lazy_equals_eager():
    rng = np.random.default_rng(4)
    bad = 0
    for _ in range(50):
        occ = oracles.random_grid(rng, 20, 20, float(rng.uniform(0.05, 0.3)))
        radius = int(rng.integers(1, 4))
        g = OccupancyGrid.from_array(occ)
        m = TraversabilityMatrix.for_grid(g, radius)
        for r, c in rng.permutation([(r, c) for r in range(20) for c in range(20)]):
            traversable(g, m, (int(c), int(r)))
        want = oracles.eager_matrix(occ, radius)
        bad += not (np.array_equal(m.states, want)
                    and np.array_equal(inflate_eager(g, radius, "scan").states, want)
                    and np.array_equal(inflate_eager(g, radius, "batch").states, want))
    verdict("C04 lazy == eager inflation", bad == 0, f"{bad}/50 mismatches")


def test_c05_heap_order():
    rng = np.random.default_rng(5)
    bad = 0
    for _ in range(10_000):
        heap, oracle = HeapOpenList(), oracles.LinearScanQueue()
        n = int(rng.integers(1, 30))
        # coarse keys force plenty of ties
        keys = rng.integers(0, 8, size=n).astype(float)
        pops = rng.random(n) < 0.3
        got, want = [], []
        for i, (f, p) in enumerate(zip(keys, pops)):
            heap.push(f, i)
            oracle.push(f, i)
            if p:
                nd = pop_min(heap)
                got.append((nd.f, nd.seq, nd.cell))
                want.append(oracle.pop())
        while len(oracle):
            nd = pop_min(heap)
            got.append((nd.f, nd.seq, nd.cell))
            want.append(oracle.pop())
        bad += got != want
    verdict("C05 heap order == linear scan", bad == 0, f"{bad}/10000 mismatches")


def test_c06_unreachable_fallback():
    scn = bench.load_scenario("unreachable")
    grid = scn.load_grid()
    m = TraversabilityMatrix.for_grid(grid, 3)
    trace = []
    res = plan(grid, m, scn.start, scn.goal, SearchConfig(), trace=trace)
    nearest = min(euclid(c, scn.goal) for c in trace)
    fallback_ok = (not res.reached_goal and euclid(res.path[-1], scn.goal) == nearest
                   and oracles.path_is_valid(res.path, inflate_eager(grid, 3).states == 1, scn.start))
    try:
        plan(grid, None, scn.start, scn.goal, SearchConfig(mode="baseline"))
        baseline_raises = False
    except PathNotFound:
        baseline_raises = True
    verdict("C06 unreachable fallback", fallback_ok and baseline_raises,
            f"terminal {res.path[-1]}, baseline raises {baseline_raises}")


def test_c07_spline_properties():
    rng = np.random.default_rng(7)
    pou = endp = bez = 0.0
    hull_bad = 0
    for _ in range(100):
        k = int(rng.integers(1, 6))
        n = k + 1 + int(rng.integers(0, 10))
        knots = clamped_uniform_knots(n, k)
        ts = np.concatenate([rng.random(50), [0.0, 1.0]])
        for t in ts:
            pou = max(pou, abs(sum(bspline_basis(i, k, t, knots) for i in range(n)) - 1.0))
        ctrl = rng.normal(size=(n, 2)) * 10
        endp = max(endp, np.abs(eval_bspline(ctrl, k, [0.0, 1.0]) - ctrl[[0, -1]]).max())
        b = rng.normal(size=(k + 1, 2)) * 10
        bez = max(bez, np.abs(eval_bspline(b, k, ts) - eval_bezier(b, ts)).max())
        # each sample lies in the hull of the k + 1 controls of its span
        hull_bad += not span_hull_ok(ctrl, k, np.linspace(0, 1, 100))
    ok = pou <= 1e-12 and endp <= 1e-9 and bez <= 1e-9 and hull_bad == 0
    verdict("C07 spline properties", ok, f"unity {pou:.1e}, endpoints {endp:.1e}, "
                                         f"bezier {bez:.1e}, hull misses {hull_bad}/100")


def test_c08_rollout():
    s = VehicleState(0, 0, 1, 0)
    pts = []
    for _ in range(1000):
        s = step(s, (0.0, P.delta_max), 0.01, P)
        pts.append((s.x, s.y))
    _, _, r = oracles.circle_fit(pts)
    want = P.wheelbase / math.tan(P.delta_max)
    rel = abs(r - want) / want
    rng = np.random.default_rng(8)
    fixed = True
    for _ in range(200):
        x, y, psi = rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-math.pi, math.pi)
        nxt = step((x, y, 0.0, psi), (0.0, rng.uniform(-P.delta_max, P.delta_max)), 0.01, P)
        fixed &= (nxt.x, nxt.y, nxt.v, nxt.psi) == (x, y, 0.0, psi)
    verdict("C08 rollout radius", rel <= 0.02 and fixed, f"radius error {100 * rel:.4f}%, fixed point {fixed}")


def _grad_rel_err(problem, guess_states, seed):
    rng = np.random.default_rng(seed)
    model = _Model(problem, guess_states, 0.05)
    z = rng.normal(size=model.lay.size) * 0.3
    nu_eq = rng.normal(size=model.n_eq)
    nu_in = rng.random(model.n_in)
    _, g = model.augmented(z, nu_eq, nu_in, 10.0)
    # directional derivatives along random directions plus a coordinate sample
    idx = rng.choice(len(z), size=min(len(z), 120), replace=False)
    fd = np.array([oracles.central_diff(lambda q: model.augmented(
        np.concatenate([z[:i], q, z[i + 1:]]), nu_eq, nu_in, 10.0)[0], z[i:i + 1])[0] for i in idx])
    return float(np.abs(fd - g[idx]).max() / max(np.abs(g[idx]).max(), 1.0))


def test_c09_optimizer(smoke_and_b):
    lines = []
    ok = True
    for seed, (name, (prob, traj)) in enumerate(smoke_and_b.items()):
        v = verify_trajectory(traj, prob)
        dn = dual_norm_residual(traj, prob) if prob.obstacles else 0.0
        gerr = _grad_rel_err(prob, traj.states[:prob.N + 1], seed)
        this = (v["max_dynamics_defect"] <= 1e-3 and dn <= 1e-3 and v["terminal_error"] <= 0.15
                and v["terminal_heading_error_deg"] <= 3.0 and gerr <= 1e-4)
        ok &= this
        lines.append(f"{name} defect {v['max_dynamics_defect']:.1e} dual {dn:.1e} "
                     f"terminal {v['terminal_error']:.3f} m/{v['terminal_heading_error_deg']:.2f} deg "
                     f"grad {gerr:.1e}")
    # gradient check with obstacles present on the smoke problem too
    prob = ParkingProblem([0, 0, 0, 0], [10, 0, 0, 0], 12, 0.25, [box(2, 3, 8, 5)], P)
    gerr = _grad_rel_err(prob, np.zeros((13, 4)), 9)
    ok &= gerr <= 1e-4
    verdict("C09 optimizer", ok, "; ".join(lines) + f"; obstacle grad {gerr:.1e}")


def test_c10_danger_suite(danger):
    rows, elapsed = danger
    opt = [r.scenario for r in rows if r.optimizer_pass]
    geo = sorted(r.scenario for r in rows if r.geometric_pass)
    ok = len(rows) == 6 and len(opt) == 6 and geo == ["danger_A", "danger_B"] and elapsed < 300
    verdict("C10 danger suite", ok, f"optimizer {len(opt)}/6, geometric {','.join(geo) or '-'}, "
                                    f"{elapsed:.1f} s")


def test_c11_comfort():
    rows = bench.run_comfort_suite([bench.load_scenario("vertical")])
    m = {r.algo: r.metrics for r in rows}
    b, i = m["baseline"], m["improved"]
    ok = i.avg_abs_accel <= 0.5 * b.avg_abs_accel and i.avg_abs_steer_deg < b.avg_abs_steer_deg
    verdict("C11 comfort", ok, f"avg|a| {i.avg_abs_accel:.3f} vs {b.avg_abs_accel:.3f}, "
                               f"avg|delta| {i.avg_abs_steer_deg:.2f} vs {b.avg_abs_steer_deg:.2f} deg")


def test_c12_zero_collisions(danger, smoke_and_b):
    accepted = [(r.scenario, r.problem, r.trajectory) for r in danger[0] if r.optimizer_pass]
    accepted += [(n, p, t) for n, (p, t) in smoke_and_b.items()]
    bad = []
    for name, prob, traj in accepted:
        oracle_free = not any(oracles.polygons_collide(footprint(s, prob.params), ob.vertices)
                              for s in traj.states for ob in prob.obstacles)
        certified = bool(np.all(dual_margins(traj, prob) > 0))
        if not (oracle_free and certified):
            bad.append(name)
    verdict("C12 zero collisions", not bad and len(accepted) >= 6,
            f"{len(accepted)} trajectories, disagreements: {','.join(bad) or 'none'}")
