"""Grid A*: the point-robot baseline and the improved planner.

The improved planner combines a distance-switched weighted heuristic with a
small tie-breaking offset, bidirectional frontiers, binary-heap open lists,
lazy ego-disc legality and a nearest-explored-node fallback for goals that
cannot be reached.
"""

import heapq
import math
import time
from dataclasses import dataclass, field

from .errors import BoundsError, EmptyError, InternalError, PathNotFound, StartBlockedError
from .gridmap import traversable

SQRT2 = math.sqrt(2.0)
_MOVES8 = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
           (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2))
_MOVES4 = _MOVES8[:4]

MODES = ("baseline", "improved_unidirectional", "improved_bidirectional")


@dataclass(frozen=True)
class SearchConfig:
    w_far: float = 2.0
    w_near: float = 0.8
    near_threshold: float = 20.0  # metres
    offset_p: float = 0.001
    connectivity: int = 8
    mode: str = "improved_bidirectional"
    # improved modes: may a diagonal step pass a blocked side cell?  (the baseline always may)
    cut_corners: bool = False

    def __post_init__(self):
        if not self.w_far >= 1.0 >= self.w_near > 0.0:
            raise ValueError("weights must satisfy w_far >= 1 >= w_near > 0")
        if not 0.0 <= self.offset_p < 0.01:
            raise ValueError("offset_p must lie in [0, 0.01)")
        if self.near_threshold < 0:
            raise ValueError("near_threshold must be >= 0")
        if self.connectivity not in (4, 8):
            raise ValueError("connectivity must be 4 or 8")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    @classmethod
    def constant(cls, w, offset_p=0.0, mode="improved_unidirectional", connectivity=8):
        """Fixed weight ``w`` everywhere: a zero threshold never selects ``w_near``."""
        return cls(w_far=float(w), w_near=min(float(w), 1.0), near_threshold=0.0,
                   offset_p=offset_p, connectivity=connectivity, mode=mode)


@dataclass(order=True)
class SearchNode:
    f: float
    seq: int
    cell: tuple = field(compare=False)
    g: float = field(default=0.0, compare=False)
    h: float = field(default=0.0, compare=False)
    parent: tuple | None = field(default=None, compare=False)


@dataclass
class PlanResult:
    path: list
    reached_goal: bool
    cost: float
    stats: dict = field(default_factory=dict)


def euclid(a, b, resolution=1.0):
    return math.hypot(a[0] - b[0], a[1] - b[1]) * resolution


def score(node_cell, goal_cell, g, cfg, resolution=1.0):
    """f = g + (w + p) h with w switched on the node's distance to the goal."""
    h = euclid(node_cell, goal_cell, resolution)
    w = cfg.w_near if h < cfg.near_threshold else cfg.w_far
    return g + (w + cfg.offset_p) * h


def path_cost(path, resolution=1.0):
    """Canonical cost from step counts, so equal paths give bit-equal costs."""
    straight = diag = 0
    for (c0, r0), (c1, r1) in zip(path, path[1:]):
        if c0 != c1 and r0 != r1:
            diag += 1
        else:
            straight += 1
    return (straight + diag * SQRT2) * resolution


# --------------------------------------------------------------------------
# open lists
# --------------------------------------------------------------------------

class HeapOpenList:
    """Binary min-heap keyed by (f, insertion sequence)."""

    def __init__(self):
        self._heap = []
        self._seq = 0

    def __len__(self):
        return len(self._heap)

    def push(self, f, cell, g=0.0, h=0.0, parent=None):
        self._seq += 1
        heapq.heappush(self._heap, (f, self._seq, cell, g, h, parent))
        return self._seq

    def pop_min(self):
        if not self._heap:
            raise EmptyError("pop from empty open list")
        f, seq, cell, g, h, parent = heapq.heappop(self._heap)
        return SearchNode(f, seq, cell, g, h, parent)

    def _pop_raw(self):
        return heapq.heappop(self._heap)


class LinearOpenList(HeapOpenList):
    """Unsorted list with an O(n) scan on every pop (the classic open list)."""

    def push(self, f, cell, g=0.0, h=0.0, parent=None):
        self._seq += 1
        self._heap.append((f, self._seq, cell, g, h, parent))
        return self._seq

    def _pop_raw(self):
        items = self._heap
        best = 0
        bf, bs = items[0][0], items[0][1]
        for i in range(1, len(items)):
            e = items[i]
            if e[0] < bf or (e[0] == bf and e[1] < bs):
                best, bf, bs = i, e[0], e[1]
        e = items[best]
        items[best] = items[-1]
        items.pop()
        return e

    def pop_min(self):
        if not self._heap:
            raise EmptyError("pop from empty open list")
        f, seq, cell, g, h, parent = self._pop_raw()
        return SearchNode(f, seq, cell, g, h, parent)


def pop_min(open_list):
    return open_list.pop_min()


# --------------------------------------------------------------------------
# path reconstruction
# --------------------------------------------------------------------------

def _walk(cell, parents):
    out = []
    seen = 0
    limit = len(parents) + 1
    while cell is not None:
        out.append(cell)
        seen += 1
        if seen > limit or cell not in parents:
            raise InternalError(f"broken parent chain at {cell}")
        cell = parents[cell]
    return out


def reconstruct(meet, parents1, parents2=None):
    """Splice start->meet (from ``parents1``) with meet->goal (from ``parents2``)."""
    head = _walk(meet, parents1)[::-1]
    if parents2 is None:
        return head
    tail = _walk(meet, parents2)
    return head + tail[1:]


# --------------------------------------------------------------------------
# frontier expansion
# --------------------------------------------------------------------------

class _Frontier:
    __slots__ = ("open", "g", "parent", "closed", "best", "best_f", "root")

    def __init__(self, root, open_cls):
        self.open = open_cls()
        self.g = {root: 0.0}
        self.parent = {root: None}
        self.closed = set()
        # lowest-f closed node: the destination handed to the opposite frontier
        self.best = None
        self.best_f = math.inf
        self.root = root


def _make_legal(grid, matrix, point_robot):
    w, h = grid.width, grid.height
    if point_robot:
        cells = grid.cells

        def legal(c, r):
            return 0 <= c < w and 0 <= r < h and not cells[r, c]
    else:
        states = matrix.states

        def legal(c, r):
            if not (0 <= c < w and 0 <= r < h):
                return False
            s = states[r, c]
            if s:
                return s > 0
            return traversable(grid, matrix, (c, r))
    return legal


def plan(grid, matrix, start, goal, cfg, open_list=None, trace=None):
    """Plan a cell path from ``start`` to ``goal``.

    ``matrix`` is the TraversabilityMatrix used for ego legality in the
    improved modes (ignored by the point-robot baseline, may be None there).
    ``open_list`` overrides the open-list backend ("heap" or "linear").
    When given, ``trace`` receives every expanded cell in order.
    """
    start = (int(start[0]), int(start[1]))
    goal = (int(goal[0]), int(goal[1]))
    if not grid.in_bounds(start):
        raise BoundsError(f"start {start} outside grid")
    if not grid.in_bounds(goal):
        raise BoundsError(f"goal {goal} outside grid")
    baseline = cfg.mode == "baseline"
    if not baseline and matrix is None:
        raise ValueError("improved modes need a TraversabilityMatrix")
    legal = _make_legal(grid, matrix, baseline)
    if not legal(*start):
        raise StartBlockedError(f"start {start} is not traversable")
    if open_list is None:
        open_list = "linear" if baseline else "heap"
    open_cls = {"heap": HeapOpenList, "linear": LinearOpenList}[open_list]
    res = grid.resolution
    moves = _MOVES8 if cfg.connectivity == 8 else _MOVES4
    if baseline:
        w_far = w_near = 1.0
        p = 0.0
        thr = 0.0
    else:
        w_far, w_near, p, thr = cfg.w_far, cfg.w_near, cfg.offset_p, cfg.near_threshold
    no_cut = not baseline and not cfg.cut_corners
    scans0 = matrix.scans if matrix is not None else 0
    t0 = time.perf_counter()

    def root_f(h):
        w = w_near if h < thr else w_far
        return (w + p) * h

    h0 = euclid(start, goal, res)
    fwd = _Frontier(start, open_cls)
    fwd.open.push(root_f(h0), start, 0.0, h0)
    bidir = cfg.mode == "improved_bidirectional"
    bwd = None
    if bidir and start != goal and legal(*goal):
        bwd = _Frontier(goal, open_cls)
        bwd.open.push(root_f(h0), goal, 0.0, h0)

    best_cell, best_d = start, euclid(start, goal)
    expansions = 0
    meet = None
    hypot = math.hypot

    def expand(fr, other, target, is_forward):
        """Pop and expand one node; returns the meeting cell or None."""
        nonlocal expansions, best_cell, best_d
        op = fr.open
        closed = fr.closed
        gtab = fr.g
        par = fr.parent
        while op:
            f, _, cell, g, _, _ = op._pop_raw()
            if cell in closed or g > gtab[cell]:
                continue
            break
        else:
            return None, False
        closed.add(cell)
        if f < fr.best_f:
            fr.best, fr.best_f = cell, f
        expansions += 1
        if trace is not None:
            trace.append(cell)
        if is_forward:
            d = hypot(cell[0] - goal[0], cell[1] - goal[1])
            if d < best_d:
                best_cell, best_d = cell, d
        if other is not None:
            if cell in other.closed:
                return cell, True
        elif cell == target:
            return cell, True
        c, r = cell
        tx, ty = target
        for dc, dr, step in moves:
            nc, nr = c + dc, r + dr
            nb = (nc, nr)
            if nb in closed or not legal(nc, nr):
                continue
            if no_cut and dc and dr and not (legal(nc, r) and legal(c, nr)):
                continue
            ng = g + step * res
            old = gtab.get(nb)
            if old is not None and ng >= old:
                continue
            gtab[nb] = ng
            par[nb] = cell
            h = hypot(nc - tx, nr - ty) * res
            w = w_near if h < thr else w_far
            op.push(ng + (w + p) * h, nb, ng, h)
        return None, True

    fwd_alive = True
    bwd_alive = bwd is not None
    if start == goal:
        meet = start
    while meet is None and fwd_alive:
        if bwd_alive:
            target = bwd.best if bwd.best is not None else goal
            meet, fwd_alive = expand(fwd, bwd, target, True)
            if meet is not None or not fwd_alive:
                break
            meet, bwd_alive = expand(bwd, fwd, fwd.best, False)
        else:
            # degenerate to unidirectional search toward the real goal
            meet, fwd_alive = expand(fwd, None, goal, True)
    t1 = time.perf_counter()

    if meet is not None:
        if bwd is not None and meet in bwd.closed:
            path = reconstruct(meet, fwd.parent, bwd.parent)
        else:
            path = reconstruct(meet, fwd.parent)
        reached = True
    elif baseline:
        raise PathNotFound(f"no path from {start} to {goal}")
    else:
        path = reconstruct(best_cell, fwd.parent)
        reached = False
    t2 = time.perf_counter()
    stats = {
        "expansions": expansions,
        "disc_scans": (matrix.scans - scans0) if matrix is not None else 0,
        "search_ms": (t1 - t0) * 1e3,
        "reconstruct_ms": (t2 - t1) * 1e3,
        "terminal_distance": euclid(path[-1], goal, res),
        "mode": cfg.mode,
        "open_list": open_list,
    }
    return PlanResult(path, reached, path_cost(path, res), stats)
