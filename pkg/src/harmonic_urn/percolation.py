"""Oriented percolation on the covering surface and its dual.

Every vertex ``v = (x, y, w)`` of the lifted lattice keeps exactly one of its
two anticlockwise out-edges: the vertical one to ``(x, y + sgn x)`` with
probability ``|x| / (|x| + |y|)`` and the horizontal one to
``(x - sgn y, y)`` otherwise.  Following out-edges traces a simple-urn path,
and all such paths are coupled through one random graph ``H``.

The winding ``w`` counts quadrants on the cover: a point of the reference
sheet in quadrant ``q`` (``q = 0`` for ``x > 0, y >= 0``, then anticlockwise,
each quadrant holding the axis ray at its clockwise end) has ``w = q``, and
``w`` moves by one at each axis crossing.

Edge choices come from a keyed hash of ``(seed, x, y, w)`` so that any vertex
can be queried in any order, forwards or backwards, with no shared state.

Dual vertices sit at half-integer points.  From ``v`` the dual graph ``H'``
keeps the clockwise edge that does not cross the ``H`` out-edge of the
lattice point ``p`` just clockwise of ``v``, and ``Phi(v)`` is ``p``
reflected in the x-axis.  Dual vertices are stored doubled, as odd integers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .exact import tail_bound
from .streams import tag_id

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


@njit(cache=True, inline="always")
def _mix(z):
    z = z + _GOLD
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _key(seed, x, y, w):
    h = _mix(np.uint64(seed))
    h = _mix(h ^ np.uint64(np.int64(x)))
    h = _mix(h ^ np.uint64(np.int64(y)))
    return _mix(h ^ np.uint64(np.int64(w)))


@njit(cache=True, inline="always")
def vertex_uniform(seed, x, y, w):
    """Uniform in [0, 1) attached to the vertex ``(x, y, w)`` of store ``seed``."""
    return np.float64(_key(seed, x, y, w) >> _S11) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def store_seed(master, tag, index):
    """Seed of the ``index``-th independent store under ``(master, tag)``."""
    return _mix(_mix(np.uint64(master) ^ _mix(np.uint64(tag))) ^ np.uint64(index))


@njit(cache=True, inline="always")
def quadrant(x, y):
    if x > 0 and y >= 0:
        return 0
    if x <= 0 and y > 0:
        return 1
    if x < 0 and y <= 0:
        return 2
    return 3


@njit(cache=True, inline="always")
def goes_vertical(seed, x, y, w):
    """True when the ``H`` out-edge of ``(x, y, w)`` is the vertical one."""
    ax = abs(x)
    return vertex_uniform(seed, x, y, w) * (ax + abs(y)) < ax


@njit(cache=True, inline="always")
def _step_w(w, x0, y0, x1, y1):
    d = quadrant(x1, y1) - quadrant(x0, y0)
    if d == -3:
        d = 1
    elif d == 3:
        d = -1
    return w + d


@njit(cache=True, inline="always")
def out_edge_raw(seed, x, y, w):
    if goes_vertical(seed, x, y, w):
        nx = x
        ny = y + (1 if x > 0 else -1)
    else:
        nx = x - (1 if y > 0 else -1)
        ny = y
    return nx, ny, _step_w(w, x, y, nx, ny)


# --------------------------------------------------------------------------
# python-level objects

@dataclass(frozen=True, order=True)
class CoverVertex:
    """Lattice point with its quadrant index on the covering surface."""

    x: int
    y: int
    winding: int = 0

    def __post_init__(self):
        if self.x == 0 and self.y == 0:
            raise ValueError("the origin is not a vertex")

    @classmethod
    def on_sheet(cls, x: int, y: int, sheet: int = 0) -> "CoverVertex":
        return cls(x, y, 4 * sheet + int(quadrant(x, y)))


@dataclass
class EdgeStore:
    """Lazily sampled ``H`` with a memo of the out-edges queried so far.

    The choice at a vertex is a pure function of ``(seed, vertex)``; the memo
    only records what has been looked at.
    """

    seed: int
    memo: dict = field(default_factory=dict)

    def out_edge(self, v: CoverVertex) -> CoverVertex:
        hit = self.memo.get(v)
        if hit is None:
            hit = CoverVertex(*(int(c) for c in out_edge_raw(np.uint64(self.seed), v.x, v.y, v.winding)))
            self.memo[v] = hit
        return hit

    def vertical(self, v: CoverVertex) -> bool:
        return bool(goes_vertical(np.uint64(self.seed), v.x, v.y, v.winding))


def out_edge(v: CoverVertex, store: EdgeStore) -> CoverVertex:
    """Head of the unique ``H`` out-edge of ``v``."""
    return store.out_edge(v)


def trace(v: CoverVertex, store: EdgeStore, steps: int) -> list[CoverVertex]:
    """The oriented ``H`` path from ``v`` (``steps + 1`` vertices)."""
    out = [v]
    for _ in range(steps):
        v = store.out_edge(v)
        out.append(v)
    return out


@dataclass
class Coalescence:
    meet: CoverVertex | None
    steps: tuple[int, int]
    exhausted: bool


def _angle_key(v: CoverVertex) -> float:
    # continuous argument on the cover, strictly increasing along H paths
    return 2 * math.pi * (v.winding // 4) + math.atan2(v.y, v.x) % (2 * math.pi)


def trace_and_coalesce(v: CoverVertex, v2: CoverVertex, store: EdgeStore,
                       winding_budget: int = 6, vertex_budget: int = 10**7) -> Coalescence:
    """Follow both oriented paths until they share a vertex.

    The path that lags in argument is advanced; arguments increase strictly
    along ``H`` paths, so the first vertex found on both is the meeting
    point.  Gives up when both paths have made ``winding_budget`` quadrant
    crossings beyond their start or ``vertex_budget`` vertices were visited.
    """
    if v == v2:
        return Coalescence(v, (0, 0), False)
    seen = ({v: 0}, {v2: 0})
    cur = [v, v2]
    n = [0, 0]
    limit = (v.winding + winding_budget, v2.winding + winding_budget)
    while n[0] + n[1] < vertex_budget:
        if cur[0].winding > limit[0] and cur[1].winding > limit[1]:
            break
        i = 0 if _angle_key(cur[0]) <= _angle_key(cur[1]) else 1
        nxt = store.out_edge(cur[i])
        n[i] += 1
        cur[i] = nxt
        seen[i][nxt] = n[i]
        if nxt in seen[1 - i]:
            return Coalescence(nxt, (seen[0][nxt], seen[1][nxt]), False)
    return Coalescence(None, (n[0], n[1]), True)


def coalescence_trials(z: int, z2: int, trials: int, seed: int,
                       winding_budget: int = 6, vertex_budget: int = 10**7) -> list[Coalescence]:
    """``trials`` coalescence runs from ``(z, 0, 0)`` and ``(z2, 0, 0)`` on fresh stores."""
    tag = tag_id("coalesce")
    out = []
    for i in range(trials):
        st = EdgeStore(int(store_seed(np.uint64(seed), np.uint64(tag), np.uint64(i))))
        out.append(trace_and_coalesce(CoverVertex(z, 0, 0), CoverVertex(z2, 0, 0), st,
                                      winding_budget, vertex_budget))
    return out


# --------------------------------------------------------------------------
# dual graph

def phi_map(x: float, y: float) -> tuple[int, int]:
    """Image of the dual vertex at half-integer ``(x, y)`` in the lattice."""
    x2, y2 = _dual_doubled(x, y)
    px, py = _clockwise_point(x2, y2)
    return px, -py


def _dual_doubled(x: float, y: float) -> tuple[int, int]:
    x2, y2 = 2 * x, 2 * y
    if x2 != int(x2) or y2 != int(y2) or int(x2) % 2 == 0 or int(y2) % 2 == 0:
        raise ValueError("dual vertices have half-integer coordinates")
    return int(x2), int(y2)


@njit(cache=True, inline="always")
def _clockwise_point(x2, y2):
    # lattice point (x + sgn(y)/2, y - sgn(x)/2) from doubled coordinates
    sx = 1 if x2 > 0 else -1
    sy = 1 if y2 > 0 else -1
    return (x2 + sy) // 2, (y2 - sx) // 2


@njit(cache=True, inline="always")
def dual_out_raw(seed, x2, y2, w):
    """Dual out-edge from the doubled half-integer point ``(x2, y2)``.

    The lattice point ``p`` clockwise of the vertex shares its cover index;
    if ``H`` leaves ``p`` vertically the dual moves in ``y``, else in ``x``.
    """
    px, py = _clockwise_point(x2, y2)
    sx = 1 if x2 > 0 else -1
    sy = 1 if y2 > 0 else -1
    if goes_vertical(seed, px, py, w):
        nx2 = x2
        ny2 = y2 - 2 * sx
    else:
        nx2 = x2 + 2 * sy
        ny2 = y2
    d = quadrant(nx2, ny2) - quadrant(x2, y2)
    if d == -3:
        d = 1
    elif d == 3:
        d = -1
    return nx2, ny2, w + d


def dual_path(x: float, y: float, store: EdgeStore, steps: int, winding: int | None = None):
    """Dual path from the half-integer point ``(x, y)`` as (x, y, w) with half-integers."""
    x2, y2 = _dual_doubled(x, y)
    w = int(quadrant(x2, y2)) if winding is None else winding
    out = [(x2 / 2, y2 / 2, w)]
    seed = np.uint64(store.seed)
    for _ in range(steps):
        x2, y2, w = (int(c) for c in dual_out_raw(seed, x2, y2, w))
        out.append((x2 / 2, y2 / 2, w))
    return out


def dual_crossings(store: EdgeStore, half_width: int = 10) -> int:
    """Count ``H'`` edges crossing an ``H`` edge in a window on the reference sheet.

    Every lattice point and dual point with coordinates in
    ``[-half_width, half_width]`` is examined.  ``H`` edges are collected as
    unordered pairs of lattice points; each dual edge is then tested against
    the single primal edge it would cross.
    """
    seed = np.uint64(store.seed)
    h_edges = set()
    r = half_width
    for x in range(-r, r + 1):
        for y in range(-r, r + 1):
            if x == 0 and y == 0:
                continue
            nx, ny, _ = out_edge_raw(seed, x, y, int(quadrant(x, y)))
            h_edges.add(frozenset(((x, y), (int(nx), int(ny)))))
    bad = 0
    for x2 in range(-2 * r + 1, 2 * r, 2):
        for y2 in range(-2 * r + 1, 2 * r, 2):
            nx2, ny2, _ = dual_out_raw(seed, x2, y2, int(quadrant(x2, y2)))
            if nx2 != x2:
                # horizontal dual move crosses the vertical primal edge at x = (x2 + nx2) / 4
                X = (x2 + nx2) // 4
                e = frozenset(((X, (y2 - 1) // 2), (X, (y2 + 1) // 2)))
            else:
                Y = (y2 + ny2) // 4
                e = frozenset((((x2 - 1) // 2, Y), ((x2 + 1) // 2, Y)))
            bad += e in h_edges
    return bad


@njit(cache=True)
def _phi_first_axis(z0, count, master, tag, out):
    # Phi-image of the dual path from (z0 - 1/2, 1/2): record m at the first (0, m) after leaving (z0, 0)
    for i in range(count):
        seed = store_seed(master, tag, i)
        x2 = 2 * z0 - 1
        y2 = 1
        w = 0
        m = -1
        for _ in range(100000000):
            x2, y2, w = dual_out_raw(seed, x2, y2, w)
            px, py = _clockwise_point(x2, y2)
            if px == 0:
                m = abs(py)
                break
        out[i] = m


def phi_first_axis(z0: int, count: int, seed: int) -> np.ndarray:
    """Height at which the ``Phi``-image of the dual path from ``(z0 - 1/2, 1/2)`` meets the y-axis.

    The image starts at ``(z0, 0)`` and leaks to ``(z0 - 1, 1)``, so the
    height is distributed as ``Z_1`` given ``Z_0 = z0 - 1``.
    """
    out = np.empty(count, np.int64)
    _phi_first_axis(np.int64(z0), count, np.uint64(seed), np.uint64(tag_id("phi")), out)
    return out


@njit(cache=True)
def _h_first_axis(z0, count, master, tag, out):
    for i in range(count):
        seed = store_seed(master, tag, i)
        x = z0
        y = 0
        w = 0
        while x != 0:
            x, y, w = out_edge_raw(seed, x, y, w)
        out[i] = y


def h_first_axis(z0: int, count: int, seed: int) -> np.ndarray:
    """Height at which the ``H`` path from ``(z0, 0, 0)`` first meets the y-axis, over fresh stores."""
    out = np.empty(count, np.int64)
    _h_first_axis(np.int64(z0), count, np.uint64(seed), np.uint64(tag_id("h-path")), out)
    return out


# --------------------------------------------------------------------------
# in-graphs

@njit(cache=True)
def _in_graph_restricted(seed, x0, y0, cap):
    # depth-first count of sites x >= 0, y > 0 (one sheet) whose H path reaches (x0, y0)
    sx = np.empty(1024, np.int64)
    sy = np.empty(1024, np.int64)
    sx[0] = x0
    sy[0] = y0
    top = 1
    count = 0
    while top > 0:
        top -= 1
        x = sx[top]
        y = sy[top]
        count += 1
        if count > cap:
            return -1
        if top + 2 > sx.size:
            sx = np.concatenate((sx, np.empty(sx.size, np.int64)))
            sy = np.concatenate((sy, np.empty(sy.size, np.int64)))
        # (x + 1, y) reaches (x, y) by a horizontal move
        if not goes_vertical(seed, x + 1, y, 0):
            sx[top] = x + 1
            sy[top] = y
            top += 1
        # (x, y - 1) reaches (x, y) by a vertical move
        if x > 0 and y > 1 and goes_vertical(seed, x, y - 1, 0):
            sx[top] = x
            sy[top] = y - 1
            top += 1
    return count


@njit(cache=True)
def _in_graph_batch(x0, y0, count, master, tag, cap, out):
    for i in range(count):
        out[i] = _in_graph_restricted(store_seed(master, tag, i), x0, y0, cap)


def in_graph_restricted(x: int, y: int, store: EdgeStore, cap: int = 10**7) -> int | None:
    """Size of the in-graph of ``(x, y)`` in the first-quadrant model (``None`` if capped).

    Sites are ``x >= 0, y > 0`` on one sheet; ``I(x, 0) = 0`` for ``x > 0``.
    Edge choices are read with winding label 0.
    """
    if x < 0 or y < 0:
        raise ValueError("the restricted model lives in x >= 0, y >= 0")
    if y == 0:
        if x == 0:
            raise ValueError("the origin is not a site")
        return 0
    c = int(_in_graph_restricted(np.uint64(store.seed), np.int64(x), np.int64(y), np.int64(cap)))
    return None if c < 0 else c


def in_graph_many(x: int, y: int, stores: int, seed: int, cap: int = 10**7) -> np.ndarray:
    """Restricted in-graph sizes over ``stores`` independent stores (-1 when capped)."""
    out = np.empty(stores, np.int64)
    if y == 0:
        out[:] = 0
        return out
    _in_graph_batch(np.int64(x), np.int64(y), stores, np.uint64(seed),
                    np.uint64(tag_id(f"ingraph-{x}-{y}")), np.int64(cap), out)
    return out


@njit(cache=True)
def _in_graph_cover(seed, x0, y0, w0, cap):
    # in-graph on the full cover; predecessors of (x, y, w) are the lattice
    # neighbours whose chosen out-edge lands on it
    sx = np.empty(1024, np.int64)
    sy = np.empty(1024, np.int64)
    sw = np.empty(1024, np.int64)
    sx[0] = x0
    sy[0] = y0
    sw[0] = w0
    top = 1
    count = 0
    while top > 0:
        top -= 1
        x = sx[top]
        y = sy[top]
        w = sw[top]
        count += 1
        if count > cap:
            return -1
        if top + 2 > sx.size:
            sx = np.concatenate((sx, np.empty(sx.size, np.int64)))
            sy = np.concatenate((sy, np.empty(sy.size, np.int64)))
            sw = np.concatenate((sw, np.empty(sw.size, np.int64)))
        # horizontal predecessor (x + sgn y, y)
        if y != 0:
            px = x + (1 if y > 0 else -1)
            py = y
            pw = _step_w(w, x, y, px, py)
            nx, ny, nw = out_edge_raw(seed, px, py, pw)
            if nx == x and ny == y and nw == w:
                sx[top] = px
                sy[top] = py
                sw[top] = pw
                top += 1
        # vertical predecessor (x, y - sgn x)
        if x != 0:
            px = x
            py = y - (1 if x > 0 else -1)
            if not (px == 0 and py == 0):
                pw = _step_w(w, x, y, px, py)
                nx, ny, nw = out_edge_raw(seed, px, py, pw)
                if nx == x and ny == y and nw == w:
                    sx[top] = px
                    sy[top] = py
                    sw[top] = pw
                    top += 1
    return count


@njit(cache=True)
def _in_graph_cover_batch(x0, y0, w0, count, master, tag, cap, out):
    for i in range(count):
        out[i] = _in_graph_cover(store_seed(master, tag, i), x0, y0, w0, cap)


def in_graph_sizes(v: CoverVertex, stores: int, seed: int, cap: int = 10**6) -> np.ndarray:
    """Full-cover in-graph sizes ``I(v)`` over independent stores (-1 when capped)."""
    out = np.empty(stores, np.int64)
    _in_graph_cover_batch(np.int64(v.x), np.int64(v.y), np.int64(v.winding), stores,
                          np.uint64(seed), np.uint64(tag_id("ingraph-cover")), np.int64(cap), out)
    return out


@dataclass(frozen=True)
class HeavyTailDiagnostic:
    """Running sample mean and ``p``-th moment of ``I(v)`` at growing sample sizes."""

    sizes: np.ndarray
    means: np.ndarray
    p_moments: np.ndarray
    p: float
    censored: int

    @property
    def mean_growth(self) -> float:
        return float(self.means[-1] / self.means[0])

    @property
    def moment_growth(self) -> float:
        return float(self.p_moments[-1] / self.p_moments[0])


def heavy_tail_diagnostic(v: CoverVertex, stores: int, seed: int, p: float = 0.5,
                          cap: int = 10**6, checkpoints: int = 4) -> HeavyTailDiagnostic:
    """Sample mean of ``I(v)`` against the ``p``-th sample moment over nested samples.

    Capped searches are counted at the cap, which only lowers the mean.
    """
    s = in_graph_sizes(v, stores, seed, cap)
    cens = int((s < 0).sum())
    x = np.where(s < 0, cap, s).astype(float)
    sizes = np.unique(np.geomspace(max(stores // 10 ** (checkpoints - 1), 1), stores,
                                   checkpoints).astype(int))
    return HeavyTailDiagnostic(sizes, np.array([x[:n].mean() for n in sizes]),
                               np.array([(x[:n] ** p).mean() for n in sizes]), p, cens)


# --------------------------------------------------------------------------
# expected traversal time by the first-step recurrence

@dataclass(frozen=True)
class TTable:
    """``T(x, y)`` for ``0 <= x <= x_max``, ``0 <= y <= Y`` with ``T(x, Y)`` set to 0.

    ``error_bound[x]`` certifies ``|T(x, 0) - table[x, 0]|``.
    """

    table: np.ndarray
    Y: int
    error_bound: np.ndarray

    def __call__(self, x: int, y: int) -> float:
        return float(self.table[x, y])


def _truncation_height(x_max: int, tolerance: float) -> int:
    # from (x, 0) the walk reaches height Y only if Z_1 >= Y; there T(x, Y) <= x / Y
    Y = x_max + 2
    while x_max / Y * tail_bound(x_max, Y - 1) >= tolerance:
        Y += 1
    return Y


def solve_T(x_max: int, tolerance: float = 1e-12) -> TTable:
    """Solve ``T(x,y) = 1/(x+y) + x/(x+y) T(x,y+1) + y/(x+y) T(x-1,y)``, ``T(0, y) = 0``.

    Rows are swept upward in ``x`` and, within a row, downward in ``y`` from
    a truncation height ``Y`` where ``T`` is replaced by 0.  Since
    ``0 <= T(x, Y) <= x / Y`` and the walk from ``(x, 0)`` reaches height
    ``Y`` with probability at most the certified tail of ``Z_1``, the
    truncation error of ``T(x, 0)`` is at most ``x / Y`` times that tail.
    """
    if x_max < 1:
        raise ValueError("x_max must be at least 1")
    Y = _truncation_height(x_max, tolerance)
    t = np.zeros((x_max + 1, Y + 1))
    for x in range(1, x_max + 1):
        row = t[x]
        prev = t[x - 1]
        for y in range(Y - 1, -1, -1):
            s = x + y
            row[y] = (1.0 + x * row[y + 1] + y * prev[y]) / s
    err = np.array([0.0] + [x / Y * tail_bound(x, Y - 1) for x in range(1, x_max + 1)])
    return TTable(t, Y, err)
