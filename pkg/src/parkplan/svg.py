"""Minimal SVG overlays: occupancy grid, paths, obstacles and footprints."""

import numpy as np

from .vehicle import footprint


class Overlay:
    """Collects layers in world metres; y points up in the rendered image."""

    def __init__(self, width_m, height_m, scale=4.0, origin=(0.0, 0.0)):
        self.w = float(width_m)
        self.h = float(height_m)
        self.scale = float(scale)
        self.ox, self.oy = origin
        self.layers = []

    @classmethod
    def for_grid(cls, grid, scale=4.0):
        ov = cls(grid.width * grid.resolution, grid.height * grid.resolution, scale,
                 (-0.5 * grid.resolution, -0.5 * grid.resolution))
        ov.grid(grid)
        return ov

    @classmethod
    def for_points(cls, points, pad=2.0, scale=20.0):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        lo = p.min(axis=0) - pad
        hi = p.max(axis=0) + pad
        return cls(hi[0] - lo[0], hi[1] - lo[1], scale, tuple(lo))

    def _xy(self, p):
        x = (p[0] - self.ox) * self.scale
        y = (self.h - (p[1] - self.oy)) * self.scale
        return f"{x:.2f},{y:.2f}"

    def grid(self, grid):
        r = grid.resolution
        s = r * self.scale
        parts = []
        for row in range(grid.height):
            occ = np.concatenate([[False], grid.cells[row], [False]])
            edges = np.flatnonzero(occ[1:] != occ[:-1])
            y = (self.h - (row * r + 0.5 * r - self.oy)) * self.scale
            # one rectangle per run of occupied cells
            for c0, c1 in zip(edges[::2], edges[1::2]):
                x = (c0 * r - 0.5 * r - self.ox) * self.scale
                parts.append(f"M{x:.2f} {y:.2f}h{(c1 - c0) * s:.2f}v{s:.2f}h{-(c1 - c0) * s:.2f}z")
        if parts:
            self.layers.append(f'<path class="grid" d="{"".join(parts)}" fill="#444"/>')

    def polyline(self, points, cls, color, width=1.5):
        pts = " ".join(self._xy(p) for p in np.asarray(points, dtype=float))
        self.layers.append(f'<polyline class="{cls}" points="{pts}" fill="none" '
                           f'stroke="{color}" stroke-width="{width}"/>')

    def polygon(self, vertices, cls, fill, stroke="none", opacity=1.0):
        pts = " ".join(self._xy(p) for p in np.asarray(vertices, dtype=float))
        self.layers.append(f'<polygon class="{cls}" points="{pts}" fill="{fill}" '
                           f'stroke="{stroke}" fill-opacity="{opacity}"/>')

    def footprints(self, states, params, every=5, color="#1f77b4"):
        states = np.asarray(states, dtype=float)
        idx = sorted(set(range(0, len(states), max(1, every))) | {len(states) - 1})
        for k in idx:
            self.polygon(footprint(states[k], params), "footprint", "none", color, 1.0)

    def render(self):
        w, h = self.w * self.scale, self.h * self.scale
        body = "\n".join(self.layers)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
                f'viewBox="0 0 {w:.2f} {h:.2f}">\n<rect width="100%" height="100%" fill="white"/>\n'
                f"{body}\n</svg>\n")


def cells_to_points(path, resolution):
    return np.asarray(path, dtype=float).reshape(-1, 2) * resolution


def plan_overlay(grid, raw_path=None, smooth=None, baseline_path=None):
    ov = Overlay.for_grid(grid)
    if baseline_path is not None and len(baseline_path):
        ov.polyline(cells_to_points(baseline_path, grid.resolution), "baseline-path", "#d62728")
    if raw_path is not None and len(raw_path):
        ov.polyline(cells_to_points(raw_path, grid.resolution), "raw-path", "#ff7f0e")
    if smooth is not None and len(smooth):
        ov.polyline(smooth, "smooth-path", "#2ca02c", 2.0)
    return ov.render()


def parking_overlay(obstacles, params, trajectory=None, guess=None, every=4):
    pts = [np.asarray(ob.vertices if hasattr(ob, "vertices") else ob) for ob in obstacles]
    for t in (trajectory, guess):
        if t is not None:
            pts.append(np.asarray(t)[:, :2])
    ov = Overlay.for_points(np.vstack(pts) if pts else np.zeros((1, 2)))
    for ob in obstacles:
        ov.polygon(ob.vertices if hasattr(ob, "vertices") else ob, "obstacle", "#888")
    if guess is not None:
        ov.polyline(np.asarray(guess)[:, :2], "guess", "#ff7f0e")
    if trajectory is not None:
        ov.polyline(np.asarray(trajectory)[:, :2], "trajectory", "#1f77b4", 2.0)
        ov.footprints(trajectory, params, every)
    return ov.render()
