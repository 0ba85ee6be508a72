"""Command-line entry point: ``parkplan plan|smooth|track|park|bench``."""

import argparse
import json
import os
import sys
from importlib import resources

import numpy as np

from . import bench, svg
from .errors import BoundsError, DomainError, IoError, ParkPlanError, ParseError
from .formats import (TRAJECTORY_COLUMNS, log_csv, path_csv, points_csv, read_path_csv,
                      read_points_csv, read_trajectory_csv, trajectory_csv, write_text)
from .gridmap import TraversabilityMatrix, bounding_radius_cells, read_pgm
from .search import SearchConfig, plan
from .simtrack import ControllerConfig, comfort_metrics, track, trajectory_reference
from .smooth import SplineConfig, smooth_path
from .vehicle import VehicleParams

# exit codes
OK, FAILED, BAD_INPUT = 0, 1, 2
_INPUT_ERRORS = (ParseError, IoError, BoundsError, DomainError)
MODES = {"baseline": "baseline", "improved": "improved_bidirectional",
         "improved_unidirectional": "improved_unidirectional",
         "improved_bidirectional": "improved_bidirectional"}


def _cell(text):
    try:
        c, r = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected X,Y integers, got {text!r}") from exc
    return c, r


def _default_map():
    return str(resources.files("parkplan") / "data" / "maps" / "lot200.pgm")


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_text(out, text)


def _vehicle(path):
    if path is None:
        return VehicleParams()
    try:
        with open(path) as fh:
            return VehicleParams.from_dict(json.load(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except (json.JSONDecodeError, TypeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _search_cfg(args):
    return SearchConfig(w_far=args.w_far, w_near=args.w_near, near_threshold=args.threshold,
                        offset_p=args.offset_p, mode=MODES[args.mode])


def _spline_cfg(args):
    return SplineConfig(degree=args.degree, sample_stride=args.stride, output_samples=args.samples)


def _info(msg):
    print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_plan(args):
    params = _vehicle(args.vehicle)
    grid = read_pgm(args.map, args.occupied_threshold, args.resolution)
    cfg = _search_cfg(args)
    matrix = None
    if cfg.mode != "baseline":
        matrix = TraversabilityMatrix.for_grid(grid, bounding_radius_cells(params, grid.resolution))
    res = plan(grid, matrix, args.start, args.goal, cfg)
    _emit(path_csv(res.path), args.out)
    smooth = None
    if args.smooth_out or args.svg:
        if matrix is not None:
            smooth = smooth_path(res.path, _spline_cfg(args), grid.resolution, grid, matrix)
        if args.smooth_out and smooth is not None:
            write_text(args.smooth_out, points_csv(smooth))
    if args.svg:
        raw = res.path if cfg.mode != "baseline" else None
        base = res.path if cfg.mode == "baseline" else None
        write_text(args.svg, svg.plan_overlay(grid, raw, smooth, base))
    _info(f"{cfg.mode}: {len(res.path)} cells, cost {res.cost:.3f}, reached_goal={res.reached_goal}, "
          f"expanded {res.stats['expansions']}")
    return OK


def cmd_smooth(args):
    path = read_path_csv(args.input)
    grid = matrix = None
    if args.map:
        grid = read_pgm(args.map, args.occupied_threshold, args.resolution)
        matrix = TraversabilityMatrix.for_grid(
            grid, bounding_radius_cells(_vehicle(args.vehicle), grid.resolution))
    curve = smooth_path(path, _spline_cfg(args), args.resolution, grid, matrix)
    _emit(points_csv(curve), args.out)
    if args.svg:
        if grid is not None:
            text = svg.plan_overlay(grid, path, curve)
        else:
            raw = np.asarray(path, float) * args.resolution
            ov = svg.Overlay.for_points(np.vstack([raw, curve]))
            ov.polyline(raw, "raw-path", "#ff7f0e")
            ov.polyline(curve, "smooth-path", "#2ca02c", 2.0)
            text = ov.render()
        write_text(args.svg, text)
    return OK


def _read_reference(filename, resolution, t_s):
    """Trajectory CSV (k,x,y,v,psi,a,delta) or a path CSV of cells / points."""
    try:
        with open(filename) as fh:
            header = fh.readline().strip().split(",")
    except OSError as exc:
        raise IoError(f"cannot read {filename}: {exc}") from exc
    if [h.strip() for h in header] == list(TRAJECTORY_COLUMNS):
        states, _ = read_trajectory_csv(filename)
        return trajectory_reference(states, t_s)
    if [h.strip() for h in header] == ["x", "y"]:
        return read_points_csv(filename)
    return np.asarray(read_path_csv(filename), float) * resolution


def cmd_track(args):
    params = _vehicle(args.vehicle)
    ref = _read_reference(args.input, args.resolution, args.t_s)
    log = track(ref, params, ControllerConfig())
    _emit(log_csv(log), args.out)
    m = comfort_metrics(log)
    _info(f"avg|a| {m.avg_abs_accel:.4f} m/s^2, avg|delta| {m.avg_abs_steer_deg:.3f} deg, "
          f"duration {m.duration:.2f} s, end: {log.meta['reason']}, "
          f"terminal error {log.meta['terminal_error']:.3f} m")
    return OK


def cmd_park(args):
    scn = bench.load_scenario(args.scenario)
    out = args.out
    if scn.kind != "danger":
        r = bench.run_scenario(scn, "improved")
        summary = {"scenario": scn.id, "reached_goal": r.plan.reached_goal, "cells": len(r.plan.path),
                   **r.timings.as_dict()}
        if r.metrics is not None:
            summary.update(avg_abs_accel=r.metrics.avg_abs_accel,
                           avg_abs_steer_deg=r.metrics.avg_abs_steer_deg)
        if out:
            bench.emit_report([r], out)
            write_text(os.path.join(out, f"{scn.id}_path.csv"), path_csv(r.plan.path))
            write_text(os.path.join(out, f"{scn.id}_smooth.csv"), points_csv(r.smooth))
        print(json.dumps(summary, indent=2))
        return OK
    row = bench.run_danger_scenario(scn)
    summary = {"scenario": scn.id, "geometric_pass": row.geometric_pass,
               "optimizer_pass": row.optimizer_pass}
    summary.update({k: v for k, v in row.details.items() if isinstance(v, (bool, int, float, str))})
    if out:
        bench.emit_report([row], out)
        if row.guess is not None:
            write_text(os.path.join(out, f"{scn.id}_guess.csv"),
                       trajectory_csv(row.guess.states, row.guess.controls))
        if row.trajectory is not None:
            write_text(os.path.join(out, f"{scn.id}_trajectory.csv"),
                       trajectory_csv(row.trajectory.states, row.trajectory.controls))
    print(json.dumps(summary, indent=2))
    return OK if row.optimizer_pass else FAILED


def cmd_bench(args):
    if args.suite == "danger":
        rows = bench.run_danger_suite()
        bench.emit_report(rows, args.out)
        sys.stdout.write(bench.danger_csv(rows))
        return OK
    scenarios = [bench.load_scenario(s) for s in args.scenarios]
    if args.suite == "timing":
        rows = []
        for scn in scenarios:
            res = bench.run_timing_suite(scn, runs=args.runs)
            ratio = bench.speedup_ratio(res["improved"].timings, res["baseline"].timings)
            _info(f"{scn.id}: improved/baseline (map load + planning) = {ratio:.4f}")
            rows += [res["baseline"], res["improved"]]
    else:
        rows = bench.run_comfort_suite(scenarios)
    bench.emit_report(rows, args.out)
    sys.stdout.write(bench.report_csv(rows))
    return OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _map_args(p):
    p.add_argument("--map", default=_default_map(), help="PGM occupancy map (default: bundled lot)")
    p.add_argument("--occupied-threshold", type=int, default=128,
                   help="gray levels below this are occupied (0-255)")
    p.add_argument("--resolution", type=float, default=1.0, help="metres per cell")
    p.add_argument("--vehicle", help="vehicle parameters JSON")


def _spline_args(p):
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--stride", type=int, default=3, help="take every n-th path cell as control point")
    p.add_argument("--samples", type=int, default=None, help="output samples (default 10 per control)")


def build_parser():
    ap = argparse.ArgumentParser(prog="parkplan", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="grid A* from --start to --goal; path CSV on stdout")
    _map_args(p)
    p.add_argument("--start", type=_cell, required=True, help="X,Y cell")
    p.add_argument("--goal", type=_cell, required=True, help="X,Y cell")
    p.add_argument("--mode", choices=sorted(MODES), default="improved")
    p.add_argument("--w-far", type=float, default=2.0)
    p.add_argument("--w-near", type=float, default=0.8)
    p.add_argument("--threshold", type=float, default=20.0, help="near/far switch distance (m)")
    p.add_argument("--offset-p", type=float, default=0.001)
    _spline_args(p)
    p.add_argument("--out", help="path CSV (default stdout)")
    p.add_argument("--smooth-out", help="write the smoothed path CSV here (improved modes)")
    p.add_argument("--svg", help="write an SVG overlay here")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("smooth", help="B-spline smoothing of a path CSV")
    p.add_argument("--in", dest="input", required=True, help="path CSV (col,row)")
    _spline_args(p)
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--map", help="re-validate samples against this PGM map")
    p.add_argument("--occupied-threshold", type=int, default=128)
    p.add_argument("--vehicle", help="vehicle parameters JSON")
    p.add_argument("--out", help="smoothed points CSV (default stdout)")
    p.add_argument("--svg", help="write an SVG overlay here")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("track", help="closed-loop tracking of a path or trajectory CSV")
    p.add_argument("--in", "--path", dest="input", required=True,
                   help="path CSV (col,row), points CSV (x,y) or trajectory CSV")
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--t-s", type=float, default=0.25, help="knot spacing of a trajectory CSV (s)")
    p.add_argument("--vehicle", help="vehicle parameters JSON")
    p.add_argument("--out", help="log CSV (default stdout)")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("park", help="run one scenario JSON")
    p.add_argument("--scenario", required=True, help="scenario JSON file or bundled scenario name")
    p.add_argument("--out", help="directory for CSV and SVG outputs")
    p.set_defaults(func=cmd_park)

    p = sub.add_parser("bench", help="run a benchmark suite and write a report")
    p.add_argument("--suite", choices=("timing", "danger", "comfort"), required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--runs", type=int, default=5, help="timing repetitions (median reported)")
    p.add_argument("--scenarios", nargs="+", default=["vertical", "parallel"],
                   help="map scenarios for the timing and comfort suites")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        _info(f"error: {exc}")
        return BAD_INPUT
    except ParkPlanError as exc:
        _info(f"{type(exc).__name__}: {exc}")
        return FAILED
    except ValueError as exc:
        _info(f"error: {exc}")
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
