"""Discrete-time simple, leaky and noisy urns.

The simple harmonic urn is the walk on ``Z^2 \\ {0}`` that from ``(x, y)``
moves to ``(x, y + sgn x)`` with probability ``|x| / (|x| + |y|)`` and to
``(x - sgn y, y)`` otherwise.  The leaky urn loses one ball at every change of
colour and is absorbed by ``C = {|x| + |y| = 1}``; the noisy urn loses a random
number ``kappa`` of balls, clamped so that the walk never lands on an axis.

Compiled kernels work with plain integers; the dataclass wrappers are for
interactive use and tests.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from .kappa import KappaSpec
from .streams import RngLike, blocks

STEP_CAP = 10**9


# --------------------------------------------------------------------------
# plain types

@dataclass(frozen=True)
class LatticeState:
    """Urn position with a count of axis hits so far."""

    x: int
    y: int
    quadrant_crossings: int = 0

    @property
    def on_axis(self) -> bool:
        return self.x == 0 or self.y == 0

    @property
    def norm(self) -> int:
        return abs(self.x) + abs(self.y)


@dataclass
class PathRecord:
    """Statistics of one leaky or noisy excursion.

    ``tau`` is the first time the walk lies in ``C``; ``tau_q`` the first
    ``k >= 1`` with ``Z~_k = 1``; ``nu_tau_q`` the step index of the axis hit
    that produced ``Z~_{tau_q}``.  Unresolved times are ``None`` and set the
    corresponding censoring flag.  ``area`` is the swept area up to ``tau``.
    """

    z0: int
    kappa_kind: str
    tau: int | None
    tau_q: int | None
    nu_tau_q: int | None
    area: Fraction | None
    z_sequence: list[int] = field(default_factory=list)
    steps: int = 0
    censored: bool = False
    tau_censored: bool = False
    tau_q_censored: bool = False


# --------------------------------------------------------------------------
# compiled primitives

@njit(cache=True, inline="always")
def _sgn(v):
    if v > 0:
        return 1
    if v < 0:
        return -1
    return 0


@njit(cache=True, inline="always")
def simple_move(x, y, u):
    """One simple-urn move driven by the uniform ``u``."""
    ax = abs(x)
    ay = abs(y)
    if u * (ax + ay) < ax:
        return x, y + _sgn(x)
    return x - _sgn(y), y


@njit(cache=True, inline="always")
def noisy_axis_move(x, y, k):
    """Axis jump of the noisy urn with discard ``k``."""
    if x == 0:
        s = _sgn(y)
        return -s, s * max(1, abs(y) - k)
    s = _sgn(x)
    return s * max(1, abs(x) - k), s


@njit(cache=True, inline="always")
def leaky_axis_move(x, y):
    if x == 0:
        s = _sgn(y)
        return -s, y - s
    s = _sgn(x)
    return x - s, s


@njit(cache=True, inline="always")
def _cross2(x0, y0, x1, y1):
    """Twice the area of the triangle (0, p0, p1)."""
    return abs(x0 * y1 - x1 * y0)


@njit(cache=True, inline="always")
def draw_kappa(rng, code, prob, alias, vals, gp, gs):
    if code == 1:
        if gp >= 1.0:
            return gs
        u = 1.0 - rng.random()
        return gs + np.int64(np.floor(np.log(u) / np.log1p(-gp)))
    if vals.size == 1:
        # point mass: no draw, so kappa = 1 shares its stream with the leaky urn
        return vals[0]
    j = np.int64(rng.random() * vals.size)
    if j >= vals.size:
        j = vals.size - 1
    if rng.random() < prob[j]:
        return vals[j]
    return vals[alias[j]]


@njit(cache=True, inline="always")
def _traverse(z, rng, cap):
    """Simple urn from (z, 0) to the next axis, in first-quadrant coordinates.

    Returns (z_next, steps, twice_area); z_next = -1 when ``cap`` is hit.
    """
    x = z
    y = 1
    steps = 1
    area2 = z
    while x > 0:
        if steps >= cap:
            return -1, steps, area2
        if rng.random() * (x + y) < x:
            area2 += x
            y += 1
        else:
            area2 += y
            x -= 1
        steps += 1
    return y, steps, area2


@njit(cache=True)
def _traverse_batch(z, count, rng, cap, out_z, out_s, out_a):
    for i in range(count):
        zn, s, a = _traverse(z, rng, cap)
        out_z[i] = zn
        out_s[i] = s
        out_a[i] = a


@njit(cache=True)
def _noisy_path(x, y, leaky, code, prob, alias, vals, gp, gs, rng,
                step_cap, stop_at_tau, zbuf):
    """Run a leaky (``leaky=True``) or noisy walk from (x, y).

    Returns (tau, tau_q, nu_tau_q, twice_area, steps, nz).  Unresolved times
    are -1.  ``zbuf`` receives Z~_1, Z~_2, ... (``nz`` values, possibly more
    than the buffer holds).
    """
    tau = -1
    tau_q = -1
    nu_q = -1
    area2 = np.int64(0)
    n = np.int64(0)
    k = np.int64(0)
    if abs(x) + abs(y) == 1:
        tau = 0
    while n < step_cap:
        if tau >= 0 and (stop_at_tau or tau_q >= 0):
            break
        if x == 0 or y == 0:
            if leaky:
                nx, ny = leaky_axis_move(x, y)
            else:
                kap = draw_kappa(rng, code, prob, alias, vals, gp, gs)
                nx, ny = noisy_axis_move(x, y, kap)
            k += 1
            zt = abs(nx) + abs(ny) - 1
            if k <= zbuf.size:
                zbuf[k - 1] = zt
            if zt == 1 and tau_q < 0:
                tau_q = k
                nu_q = n
        else:
            nx, ny = simple_move(x, y, rng.random())
        n += 1
        if tau < 0:
            area2 += _cross2(x, y, nx, ny)
            if abs(nx) + abs(ny) == 1:
                tau = n
        x = nx
        y = ny
    return tau, tau_q, nu_q, area2, n, k


# --------------------------------------------------------------------------
# public stepping functions

def _check_state(state: LatticeState) -> None:
    if state.x == 0 and state.y == 0:
        raise ValueError("the origin is not a state of the urn")


def step_simple(state: LatticeState, u: float) -> LatticeState:
    """Advance the simple urn by one step using the uniform ``u``.

    Parameters
    ----------
    state : LatticeState
        Current position, not the origin.
    u : float
        Uniform sample in [0, 1).

    Returns
    -------
    LatticeState
        ``(x, y + sgn x)`` if ``u < |x|/(|x|+|y|)``, else ``(x - sgn y, y)``;
        the crossing count goes up when the new state is on an axis.
    """
    _check_state(state)
    nx, ny = simple_move(state.x, state.y, float(u))
    hit = int(nx == 0 or ny == 0)
    return LatticeState(int(nx), int(ny), state.quadrant_crossings + hit)


def step_axis_noisy(state: LatticeState, kappa_sample: int) -> LatticeState:
    """Noisy-urn jump from an axis point, discarding ``kappa_sample`` balls."""
    _check_state(state)
    if not state.on_axis:
        raise ValueError("noisy axis jump requested from an interior state")
    nx, ny = noisy_axis_move(state.x, state.y, int(kappa_sample))
    return LatticeState(int(nx), int(ny), state.quadrant_crossings)


def step_axis_leaky(state: LatticeState) -> LatticeState:
    """Leaky-urn jump from an axis point."""
    _check_state(state)
    if not state.on_axis:
        raise ValueError("leaky axis jump requested from an interior state")
    nx, ny = leaky_axis_move(state.x, state.y)
    return LatticeState(int(nx), int(ny), state.quadrant_crossings)


def triangle_area(prev: LatticeState | tuple, nxt: LatticeState | tuple) -> Fraction:
    """Area of the triangle spanned by the origin and two consecutive states."""
    x0, y0 = (prev.x, prev.y) if isinstance(prev, LatticeState) else prev
    x1, y1 = (nxt.x, nxt.y) if isinstance(nxt, LatticeState) else nxt
    if (x0, y0) == (x1, y1):
        raise ValueError("states must differ")
    return Fraction(abs(x0 * y1 - x1 * y0), 2)


def _s(v: int) -> int:
    return (v > 0) - (v < 0)


def leaky_q(x: int, y: int) -> Fraction:
    """The function ``Q`` whose value along the leaky urn is a martingale.

    ``Q(x, y) = (x + s(y)/2 - [y=0] s(x)/2)^2 + (y - s(x)/2 - [x=0] s(y)/2)^2``.
    """
    h = Fraction(1, 2)
    a = x + h * _s(y) - h * (y == 0) * _s(x)
    b = y - h * _s(x) - h * (x == 0) * _s(y)
    return a * a + b * b


def leaky_transitions(x: int, y: int) -> list[tuple[tuple[int, int], Fraction]]:
    """Exact one-step law of the leaky urn from ``(x, y)``."""
    if x == 0 and y == 0:
        raise ValueError("the origin is not a state of the urn")
    if x == 0 or y == 0:
        return [(tuple(int(v) for v in leaky_axis_move(x, y)), Fraction(1))]
    ax, ay = abs(x), abs(y)
    return [((x, y + _s(x)), Fraction(ax, ax + ay)), ((x - _s(y), y), Fraction(ay, ax + ay))]


def leaky_q_drift(x: int, y: int) -> Fraction:
    """``E[Q(next)] - Q(x, y)`` under the leaky urn, in exact arithmetic."""
    return sum((p * leaky_q(*v) for v, p in leaky_transitions(x, y)), Fraction(0)) - leaky_q(x, y)


def traverse_quadrant(z: int, rng: np.random.Generator, cap: int = STEP_CAP) -> dict:
    """One simple-urn quadrant traversal from the axis point at distance ``z``.

    Returns
    -------
    dict
        ``z_next``, ``steps`` (equal to ``z + z_next``), ``area`` (Fraction)
        and ``censored``.
    """
    if z < 1:
        raise ValueError("z must be positive")
    zn, s, a2 = _traverse(np.int64(z), rng, np.int64(cap))
    return {"z_next": int(zn) if zn > 0 else None, "steps": int(s),
            "area": Fraction(int(a2), 2), "censored": zn < 0}


def traverse_many(z: int, count: int, rng: RngLike, cap: int = STEP_CAP,
                  tag: str = "traverse") -> dict[str, np.ndarray]:
    """``count`` independent traversals from ``z``; arrays ``z_next``, ``steps``, ``area2``."""
    out_z = np.empty(count, np.int64)
    out_s = np.empty(count, np.int64)
    out_a = np.empty(count, np.int64)
    pos = 0
    for g, c in blocks(rng, tag, count):
        _traverse_batch(np.int64(z), c, g, np.int64(cap),
                        out_z[pos:pos + c], out_s[pos:pos + c], out_a[pos:pos + c])
        pos += c
    return {"z_next": out_z, "steps": out_s, "area2": out_a}


def simple_path(z0: int, steps: int, rng: np.random.Generator) -> list[LatticeState]:
    """Explicit simple-urn path from ``(z0, 0)``, for inspection."""
    s = LatticeState(int(z0), 0)
    out = [s]
    for u in rng.random(steps):
        s = step_simple(s, u)
        out.append(s)
    return out


def _record(z0, label, res, zbuf, keep_z, stop_at_tau):
    tau, tau_q, nu_q, area2, n, k = (int(v) for v in res)
    tau_c = tau < 0
    q_c = tau_q < 0 and not stop_at_tau
    zs = [z0] + [int(v) for v in zbuf[:min(k, zbuf.size)]] if keep_z else []
    return PathRecord(
        z0=z0, kappa_kind=label,
        tau=None if tau_c else tau,
        tau_q=None if tau_q < 0 else tau_q,
        nu_tau_q=None if tau_q < 0 else nu_q,
        area=None if tau_c else Fraction(area2, 2),
        z_sequence=zs, steps=n, censored=tau_c or q_c,
        tau_censored=tau_c, tau_q_censored=tau_q < 0,
    )


def simulate_leaky(z0: int, rng: np.random.Generator, step_cap: int = STEP_CAP,
                   start: tuple[int, int] | None = None, keep_z: int = 10**5) -> PathRecord:
    """Leaky urn from ``(z0, 1)`` (or ``start``) until it enters ``C``.

    ``tau`` counts steps from time 0, so a start inside ``C`` gives 0.
    """
    x, y = (int(z0), 1) if start is None else (int(start[0]), int(start[1]))
    if (x, y) == (0, 0):
        raise ValueError("the origin is not a state")
    if start is None and z0 < 1:
        raise ValueError("z0 must be positive")
    zbuf = np.zeros(max(keep_z, 1), np.int64)
    args = KappaSpec.point(1).kernel_args()
    res = _noisy_path(np.int64(x), np.int64(y), True, *args, rng, np.int64(step_cap), True, zbuf)
    return _record(int(z0), "leaky", res, zbuf, keep_z > 0, True)


def simulate_noisy(z0: int, kappa: KappaSpec, rng: np.random.Generator,
                   step_cap: int = STEP_CAP, keep_z: int = 10**5) -> PathRecord:
    """Noisy urn from ``(z0, 1)`` until both ``tau`` and ``tau_q`` are known.

    ``Z~_0 = z0`` and ``Z~_k`` is ``|x| + |y| - 1`` just after the ``k``-th
    axis jump.  When ``kappa >= 0`` the walk can only enter ``C`` at an axis
    point, so ``tau`` is the step of an axis hit and ``tau >= nu_tau_q``.
    """
    if z0 < 1:
        raise ValueError("z0 must be positive")
    zbuf = np.zeros(max(keep_z, 1), np.int64)
    res = _noisy_path(np.int64(z0), np.int64(1), False, *kappa.kernel_args(), rng,
                      np.int64(step_cap), False, zbuf)
    return _record(int(z0), kappa.label(), res, zbuf, keep_z > 0, False)


@njit(cache=True)
def _noisy_batch(z0, code, prob, alias, vals, gp, gs, rng, step_cap, count,
                 o_tau, o_tq, o_nu, o_area, o_steps):
    zbuf = np.zeros(1, np.int64)
    for i in range(count):
        r = _noisy_path(z0, np.int64(1), False, code, prob, alias, vals, gp, gs,
                        rng, step_cap, False, zbuf)
        o_tau[i] = r[0]
        o_tq[i] = r[1]
        o_nu[i] = r[2]
        o_area[i] = r[3]
        o_steps[i] = r[4]


def simulate_noisy_many(z0: int, kappa: KappaSpec, replicas: int, rng: RngLike,
                        step_cap: int = STEP_CAP, tag: str = "noisy") -> dict[str, np.ndarray]:
    """Batch of noisy paths; -1 marks unresolved times."""
    keys = ("tau", "tau_q", "nu_tau_q", "area2", "steps")
    out = {k: np.empty(replicas, np.int64) for k in keys}
    pos = 0
    for g, c in blocks(rng, tag, replicas):
        sl = slice(pos, pos + c)
        _noisy_batch(np.int64(z0), *kappa.kernel_args(), g, np.int64(step_cap), c,
                     *(out[k][sl] for k in keys))
        pos += c
    return out


# --------------------------------------------------------------------------
# exact path enumeration

def path_probability(path: Sequence[tuple[int, int]]) -> Fraction:
    """Exact probability that the simple urn follows ``path`` from its first point."""
    p = Fraction(1)
    for (x0, y0), (x1, y1) in zip(path, path[1:]):
        ax, ay = abs(x0), abs(y0)
        if (x1, y1) == (x0, y0 + (x0 > 0) - (x0 < 0)):
            p *= Fraction(ax, ax + ay)
        elif (x1, y1) == (x0 - (y0 > 0) + (y0 < 0), y0):
            p *= Fraction(ay, ax + ay)
        else:
            return Fraction(0)
    return p


def admissible_traversals(n: int, m: int) -> list[list[tuple[int, int]]]:
    """All first-quadrant traversals from ``(n, 0)`` to ``(0, m)``."""
    out: list[list[tuple[int, int]]] = []

    def grow(path):
        x, y = path[-1]
        if x == 0:
            if y == m:
                out.append(list(path))
            return
        if y > m:
            return
        for nxt in ((x, y + 1), (x - 1, y)):
            if nxt[1] <= m:
                path.append(nxt)
                grow(path)
                path.pop()

    grow([(n, 0), (n, 1)])
    return out


# --------------------------------------------------------------------------
# serialisation

CSV_COLUMNS = ("seed", "replica", "z0", "kappa_kind", "tau", "tau_q",
               "area_num", "area_den", "censored")


def _row(seed, i, r: PathRecord) -> dict:
    a = r.area
    return {"seed": seed, "replica": i, "z0": r.z0, "kappa_kind": r.kappa_kind,
            "tau": "" if r.tau is None else r.tau,
            "tau_q": "" if r.tau_q is None else r.tau_q,
            "area_num": "" if a is None else a.numerator,
            "area_den": "" if a is None else a.denominator,
            "censored": int(r.censored)}


def records_to_csv(records: Iterable[PathRecord], seed: int) -> str:
    """RFC-4180 CSV for a batch of records."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\r\n")
    w.writeheader()
    for i, r in enumerate(records):
        w.writerow(_row(seed, i, r))
    return buf.getvalue()


def records_to_json(records: Iterable[PathRecord], seed: int) -> str:
    rows = []
    for i, r in enumerate(records):
        d = _row(seed, i, r)
        d = {k: (None if v == "" else v) for k, v in d.items()}
        d["steps"] = r.steps
        d["nu_tau_q"] = r.nu_tau_q
        rows.append(d)
    return json.dumps({"schema": 1, "records": rows})
