"""Scenarios, phase-timed planner runs, the danger suite and report files."""

import csv
import io
import json
import math
import os
import statistics
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import svg
from .errors import DomainError, GeometryError, Infeasible, IoError, ParkPlanError, ParseError
from .formats import write_text
from .gridmap import TraversabilityMatrix, bounding_radius_cells, inflate_eager, load_pgm
from .guess import arc_line_guess_retry, validate_guess
from .optimizer import (ObjectiveWeights, ParkingProblem, SolverConfig, dual_margins,
                        dual_norm_residual, solve_parking, verify_trajectory)
from .search import SearchConfig, plan
from .simtrack import ControllerConfig, comfort_metrics, track
from .smooth import SplineConfig, smooth_path
from .vehicle import Trajectory, VehicleParams, footprint
from .geometry import polygons_intersect

KINDS = ("vertical", "parallel", "unreachable", "danger")
ALGOS = ("baseline", "improved")
REPORT_COLUMNS = ("scenario", "algo", "init_ms", "map_load_ms", "planning_ms",
                  "avg_abs_accel", "avg_abs_steer_deg")
PHASE_COLUMNS = ("scenario", "algo", "init_ms", "map_load_ms", "planning_ms",
                 "path_generation_ms", "interpolation_ms", "total_ms", "reached_goal", "status")
DANGER_COLUMNS = ("scenario", "geometric_pass", "optimizer_pass")


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------

@dataclass
class Scenario:
    id: str
    kind: str
    map: str | None = None
    start: tuple | None = None
    goal: tuple | None = None
    spot_pose: tuple | None = None
    start_pose: tuple | None = None
    obstacles: list = field(default_factory=list)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    N: int = 40
    t_s: float = 0.25
    guess_radius: float = 5.0
    gear: str = "auto"
    resolution: float = 1.0
    occupied_threshold: int = 128
    description: str = ""
    base_dir: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"scenario kind must be one of {KINDS}")
        if self.map is not None and not self.map_path().is_file():
            raise IoError(f"scenario {self.id}: map {self.map} not found")
        if self.kind == "danger" and (self.spot_pose is None or self.start_pose is None):
            raise DomainError(f"scenario {self.id}: danger scenarios need start_pose and spot_pose")
        if self.kind != "danger" and (self.map is None or self.start is None or self.goal is None):
            raise DomainError(f"scenario {self.id}: map scenarios need map, start and goal")

    def map_path(self):
        p = Path(self.map)
        if p.is_absolute():
            return p
        if self.base_dir is not None and (Path(self.base_dir) / p).is_file():
            return Path(self.base_dir) / p
        return Path(str(resources.files("parkplan") / "data" / "maps" / self.map))

    def load_grid(self):
        grid = load_pgm(self.map_path().read_bytes(), self.occupied_threshold, self.resolution)
        if not grid.in_bounds(self.start):
            raise DomainError(f"scenario {self.id}: start {self.start} outside the map")
        return grid

    def problem(self):
        if self.spot_pose is None or self.start_pose is None:
            raise DomainError(f"scenario {self.id} has no parking problem")
        x0 = [self.start_pose[0], self.start_pose[1], 0.0, self.start_pose[2]]
        xf = [self.spot_pose[0], self.spot_pose[1], 0.0, self.spot_pose[2]]
        return ParkingProblem(x0, xf, self.N, self.t_s, [np.asarray(o, float) for o in self.obstacles],
                              self.vehicle, self.weights)


def _tuple(v, n, name, sid):
    if v is None:
        return None
    if not isinstance(v, (list, tuple)) or len(v) != n:
        raise ParseError(f"scenario {sid}: {name} must have {n} entries")
    return tuple(float(q) if n == 3 else int(q) for q in v)


def scenario_from_dict(d, base_dir=None):
    try:
        sid = str(d["id"])
        kind = str(d["kind"])
    except (KeyError, TypeError) as exc:
        raise ParseError("scenario needs 'id' and 'kind'") from exc
    hz = d.get("horizon", {})
    gs = d.get("guess", {})
    return Scenario(
        id=sid, kind=kind, map=d.get("map"),
        start=_tuple(d.get("start"), 2, "start", sid), goal=_tuple(d.get("goal"), 2, "goal", sid),
        spot_pose=_tuple(d.get("spot_pose"), 3, "spot_pose", sid),
        start_pose=_tuple(d.get("start_pose"), 3, "start_pose", sid),
        obstacles=[[tuple(map(float, p)) for p in ob] for ob in d.get("obstacles", [])],
        vehicle=VehicleParams.from_dict(d.get("vehicle", {})),
        weights=ObjectiveWeights(**d.get("weights", {})),
        N=int(hz.get("N", 40)), t_s=float(hz.get("t_s", 0.25)),
        guess_radius=float(gs.get("radius", 5.0)), gear=str(gs.get("gear", "auto")),
        resolution=float(d.get("resolution", 1.0)),
        occupied_threshold=int(d.get("occupied_threshold", 128)),
        description=str(d.get("description", "")), base_dir=base_dir,
    )


def load_scenario(path):
    """Scenario from a JSON file path or the name of a bundled scenario."""
    p = Path(path)
    if not p.suffix and not p.exists():
        p = Path(str(resources.files("parkplan") / "data" / "scenarios" / f"{path}.json"))
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise IoError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"scenario {path}: {exc}") from exc
    return scenario_from_dict(doc, base_dir=str(p.parent))


def bundled_scenarios(kind=None):
    root = resources.files("parkplan") / "data" / "scenarios"
    names = sorted(e.name[:-5] for e in root.iterdir() if e.name.endswith(".json"))
    out = [load_scenario(n) for n in names]
    return [s for s in out if kind is None or s.kind == kind]


# --------------------------------------------------------------------------
# phase-timed planner runs
# --------------------------------------------------------------------------

@dataclass
class PhaseTimings:
    init_ms: float = 0.0
    map_load_ms: float = 0.0
    planning_ms: float = 0.0
    path_generation_ms: float = 0.0
    interpolation_ms: float = 0.0
    total_ms: float = 0.0

    @property
    def map_and_plan_ms(self):
        return self.map_load_ms + self.planning_ms

    def as_dict(self):
        return {k: getattr(self, k) for k in ("init_ms", "map_load_ms", "planning_ms",
                                              "path_generation_ms", "interpolation_ms", "total_ms")}


@dataclass(frozen=True)
class BenchConfig:
    search: SearchConfig = field(default_factory=SearchConfig)
    spline: SplineConfig = field(default_factory=SplineConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    # per-cell eager inflation: the same disc primitive the lazy matrix calls
    inflation: str = "scan"
    track: bool = True


@dataclass
class RunResult:
    scenario: str
    algo: str
    timings: PhaseTimings
    plan: object = None
    smooth: np.ndarray | None = None
    metrics: object = None
    log: object = None
    status: str = "ok"
    grid: object = None


def _ms(t0, t1):
    return (t1 - t0) * 1e3


def run_scenario(scn, algo, cfg=BenchConfig()):
    """Run one planner on a map scenario, timing each planning phase.

    Planner errors propagate with ``exc.timings`` set to the partial row.
    """
    if algo not in ALGOS:
        raise ValueError(f"algo must be one of {ALGOS}")
    tm = PhaseTimings()
    t_begin = time.perf_counter()
    t = time.perf_counter()
    grid = scn.load_grid()
    params = scn.vehicle
    controller = cfg.controller
    radius = bounding_radius_cells(params, grid.resolution)
    tm.init_ms = _ms(t, time.perf_counter())
    t_plan = None
    try:
        t = time.perf_counter()
        if algo == "baseline":
            matrix = inflate_eager(grid, radius, method=cfg.inflation)
            search_cfg = SearchConfig(mode="baseline")
        else:
            matrix = TraversabilityMatrix.for_grid(grid, radius)
            search_cfg = cfg.search
        tm.map_load_ms = _ms(t, time.perf_counter())
        t = t_plan = time.perf_counter()
        res = plan(grid, matrix if algo == "improved" else None, scn.start, scn.goal, search_cfg)
        elapsed = _ms(t, time.perf_counter())
        tm.path_generation_ms = res.stats["reconstruct_ms"]
        tm.planning_ms = max(elapsed - tm.path_generation_ms, 0.0)
        t_plan = None
        smooth = None
        if algo == "improved":
            t = time.perf_counter()
            smooth = smooth_path(res.path, cfg.spline, grid.resolution, grid, matrix)
            tm.interpolation_ms = _ms(t, time.perf_counter())
    except ParkPlanError as exc:
        if t_plan is not None:
            tm.planning_ms = _ms(t_plan, time.perf_counter())
        tm.total_ms = _ms(t_begin, time.perf_counter())
        exc.timings = tm
        raise
    tm.total_ms = _ms(t_begin, time.perf_counter())
    out = RunResult(scn.id, algo, tm, res, smooth, status="ok" if res.reached_goal else "fallback",
                    grid=grid)
    if cfg.track and len(res.path) >= 2:
        ref = smooth if smooth is not None else np.asarray(res.path, float) * grid.resolution
        out.log = track(ref, params, controller)
        out.metrics = comfort_metrics(out.log)
    return out


def speedup_ratio(improved, baseline):
    """Improved over baseline (map load + planning); below 0.1 means a >= 90 % reduction."""
    return improved.map_and_plan_ms / max(baseline.map_and_plan_ms, 1e-12)


def run_timing_suite(scn, runs=5, cfg=BenchConfig(track=False)):
    """Median phase timings per algorithm over ``runs`` repetitions."""
    out = {}
    for algo in ALGOS:
        rows = []
        last = None
        for _ in range(runs):
            last = run_scenario(scn, algo, cfg)
            rows.append(last.timings)
        med = PhaseTimings(**{k: statistics.median(getattr(r, k) for r in rows)
                              for k in PhaseTimings().as_dict()})
        last.timings = med
        out[algo] = last
    return out


def run_comfort_suite(scenarios, cfg=BenchConfig()):
    """Both algorithms on each scenario under the shared controller config."""
    rows = []
    for scn in scenarios:
        for algo in ALGOS:
            rows.append(run_scenario(scn, algo, cfg))
    return rows


# --------------------------------------------------------------------------
# danger suite
# --------------------------------------------------------------------------

@dataclass
class DangerRow:
    scenario: str
    geometric_pass: bool
    optimizer_pass: bool
    details: dict = field(default_factory=dict)
    guess: Trajectory | None = None
    trajectory: object = None
    problem: ParkingProblem | None = None


def _terminal_ok(states, pose, pos_tol=0.15, psi_tol_deg=3.0):
    dx = math.hypot(states[-1, 0] - pose[0], states[-1, 1] - pose[1])
    dpsi = abs(math.remainder(states[-1, 3] - pose[2], 2 * math.pi))
    return dx <= pos_tol and math.degrees(dpsi) <= psi_tol_deg


def geometric_plan(scn):
    """Arc-line guess over N + 1 intervals: the N + 2 knots the optimizer expects."""
    return arc_line_guess_retry(scn.start_pose, scn.spot_pose, scn.guess_radius, scn.N + 1,
                                scn.t_s, scn.vehicle, scn.gear)


def run_danger_scenario(scn, cfg=BenchConfig()):
    problem = scn.problem()
    details = {}
    try:
        guess = geometric_plan(scn)
    except GeometryError as exc:
        return DangerRow(scn.id, False, False, {"error": str(exc)}, problem=problem)
    chk = validate_guess(guess, problem.obstacles, scn.vehicle)
    geo_pass = chk["collision_free"] and _terminal_ok(guess.states, scn.spot_pose)
    details["geometric_first_violation"] = chk["first_violation"]
    t = time.perf_counter()
    traj = None
    try:
        traj = solve_parking(problem, guess, cfg.solver)
        ver = verify_trajectory(traj, problem)
        margins = dual_margins(traj, problem)
        details.update(ver)
        details["solve_s"] = time.perf_counter() - t
        details["iterations"] = traj.report["iterations"]
        details["dual_norm_residual"] = dual_norm_residual(traj, problem)
        details["min_dual_margin"] = float(margins.min(initial=np.inf))
        opt_pass = bool(ver["collision_free"] and ver["terminal_ok"] and ver["dynamics_ok"]
                        and ver["bounds_ok"])
    except Infeasible as exc:
        details["error"] = str(exc)
        details["solve_s"] = time.perf_counter() - t
        opt_pass = False
    return DangerRow(scn.id, bool(geo_pass), opt_pass, details, guess, traj, problem)


def run_danger_suite(scenarios=None, cfg=BenchConfig()):
    if scenarios is None:
        scenarios = bundled_scenarios("danger")
    return [run_danger_scenario(s, cfg) for s in scenarios]


def collision_agreement(row):
    """For an accepted optimizer trajectory: oracle verdict and dual certificate at the knots.

    Returns (oracle_collision_free, duals_certify) where the certificate is a
    positive dual margin at every free knot against every obstacle.
    """
    problem = row.problem
    traj = row.trajectory
    oracle = not any(polygons_intersect(footprint(s, problem.params), ob.vertices)
                     for s in traj.states for ob in problem.obstacles)
    return oracle, bool(np.all(dual_margins(traj, problem) > 0.0))


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------

def _f(v, digits=6):
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return ""
    return f"{v:.{digits}f}"


def report_csv(rows):
    """CSV of the five planner metrics; fixed column order."""
    if not rows:
        raise DomainError("report needs at least one row")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        m = r.metrics
        w.writerow([r.scenario, r.algo, _f(r.timings.init_ms, 3), _f(r.timings.map_load_ms, 3),
                    _f(r.timings.planning_ms, 3), _f(m.avg_abs_accel if m else None),
                    _f(m.avg_abs_steer_deg if m else None)])
    return buf.getvalue()


def phases_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PHASE_COLUMNS)
    for r in rows:
        t = r.timings
        reached = "" if r.plan is None else str(bool(r.plan.reached_goal)).lower()
        w.writerow([r.scenario, r.algo] + [_f(v, 3) for v in t.as_dict().values()] + [reached, r.status])
    return buf.getvalue()


def danger_csv(rows):
    if not rows:
        raise DomainError("report needs at least one row")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DANGER_COLUMNS)
    for r in rows:
        w.writerow([r.scenario, "pass" if r.geometric_pass else "fail",
                    "pass" if r.optimizer_pass else "fail"])
    return buf.getvalue()


def parse_danger_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return [(r["scenario"], r["geometric_pass"] == "pass", r["optimizer_pass"] == "pass") for r in rows]


def _check_dir(out_dir):
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out_dir}: {exc}") from exc
    if not os.access(out_dir, os.W_OK):
        raise IoError(f"{out_dir} is not writable")


def emit_report(rows, out_dir):
    """Write report CSVs and SVG overlays; returns the written paths.

    ``rows`` are RunResults (planner runs) or DangerRows.
    """
    if not rows:
        raise DomainError("report needs at least one row")
    _check_dir(out_dir)
    out = []
    if isinstance(rows[0], DangerRow):
        p = os.path.join(out_dir, "danger.csv")
        write_text(p, danger_csv(rows))
        out.append(p)
        for r in rows:
            if r.guess is None or r.problem is None:
                continue
            traj = r.trajectory.states if r.trajectory is not None else None
            p = os.path.join(out_dir, f"{r.scenario}.svg")
            write_text(p, svg.parking_overlay(r.problem.obstacles, r.problem.params, traj,
                                              r.guess.states))
            out.append(p)
        return out
    p = os.path.join(out_dir, "report.csv")
    write_text(p, report_csv(rows))
    out.append(p)
    p = os.path.join(out_dir, "phases.csv")
    write_text(p, phases_csv(rows))
    out.append(p)
    by_scn = {}
    for r in rows:
        by_scn.setdefault(r.scenario, {})[r.algo] = r
    for sid, runs in by_scn.items():
        imp, base = runs.get("improved"), runs.get("baseline")
        grid = next(r.grid for r in runs.values())
        if grid is None:
            continue
        p = os.path.join(out_dir, f"{sid}.svg")
        write_text(p, svg.plan_overlay(grid, imp.plan.path if imp and imp.plan else None,
                                       imp.smooth if imp else None,
                                       base.plan.path if base and base.plan else None))
        out.append(p)
    return out
