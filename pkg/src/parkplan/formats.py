"""CSV readers and writers for paths, trajectories and drive logs."""

import csv
import io
import os

import numpy as np

from .errors import IoError, ParseError

PATH_COLUMNS = ("col", "row")
TRAJECTORY_COLUMNS = ("k", "x", "y", "v", "psi", "a", "delta")
LOG_COLUMNS = ("t", "x", "y", "v", "psi", "a", "delta")


def _fmt(v):
    return repr(float(v))


def _write(path, text):
    try:
        d = os.path.dirname(os.fspath(path))
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _read_rows(path, columns):
    try:
        with open(path, newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if rows and [c.strip() for c in rows[0]] == list(columns):
        rows = rows[1:]
    try:
        out = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric value ({exc})") from exc
    if out.size == 0:
        return np.zeros((0, len(columns)))
    if out.ndim != 2 or out.shape[1] != len(columns):
        raise ParseError(f"{path}: expected {len(columns)} columns {columns}")
    return out


def path_csv(path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PATH_COLUMNS)
    for c, r in path:
        w.writerow((int(c), int(r)))
    return buf.getvalue()


def write_path_csv(filename, path):
    _write(filename, path_csv(path))


def read_path_csv(filename):
    """Cells as a list of (col, row); also accepts float point lists."""
    rows = _read_rows(filename, PATH_COLUMNS)
    if np.allclose(rows, np.round(rows)):
        return [(int(c), int(r)) for c, r in np.round(rows)]
    return [tuple(p) for p in rows]


def points_csv(points, columns=("x", "y")):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for p in np.asarray(points, dtype=float):
        w.writerow([_fmt(v) for v in p])
    return buf.getvalue()


def write_points_csv(filename, points):
    _write(filename, points_csv(points))


def read_points_csv(filename, columns=("x", "y")):
    return _read_rows(filename, columns)


def trajectory_csv(states, controls):
    """One row per knot; the last knot repeats zero controls."""
    states = np.asarray(states, dtype=float)
    controls = np.asarray(controls, dtype=float).reshape(-1, 2)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for k, s in enumerate(states):
        u = controls[k] if k < len(controls) else (0.0, 0.0)
        w.writerow([k] + [_fmt(v) for v in (*s, *u)])
    return buf.getvalue()


def write_trajectory_csv(filename, states, controls):
    _write(filename, trajectory_csv(states, controls))


def read_trajectory_csv(filename):
    """Returns (states (n, 4), controls (n - 1, 2))."""
    rows = _read_rows(filename, TRAJECTORY_COLUMNS)
    if len(rows) < 2:
        raise ParseError(f"{filename}: need at least two knots")
    return rows[:, 1:5], rows[:-1, 5:7]


def log_csv(log):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    for t, s, u in zip(log.t, log.states, log.controls):
        w.writerow([_fmt(v) for v in (t, *s, *u)])
    return buf.getvalue()


def write_log_csv(filename, log):
    _write(filename, log_csv(log))


def write_text(filename, text):
    _write(filename, text)
