"""Continuous-time embeddings of the urn and the exact traversal polynomials.

The fast embedding ``(A(t), B(t))`` jumps at rate ``|a| + |b|``; its mean
rotates as ``e^{it}`` and a quadrant traversal takes time ``tau_f`` close to
``pi/2``.  The slow embedding runs an independent death process ``U`` (rate
``1/u``) and birth process ``V`` (rate ``1/v``) whose jump chain is one
quadrant traversal of the urn.

``E_n[tau_f]`` and the expected enclosed area are rational polynomials in
``e`` of degree ``n``; both are evaluated here with exact rational
coefficients and a precision-escalated transcendental part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np
from numba import njit

from .precision import PrecisionConfig, escalate
from .streams import RngLike, as_generator, blocks

STOP_AXIS, STOP_HORIZON = 0, 1


# --------------------------------------------------------------------------
# fast embedding

@njit(cache=True)
def _fast_run(a, b, stop, horizon, max_events, rng):
    """Gillespie run; returns (a, b, t, events, done).

    With ``stop == STOP_AXIS`` the run ends when ``a`` reaches 0 (``done``)
    or the clock passes ``horizon``; with ``STOP_HORIZON`` it returns the
    state at time ``horizon``.
    """
    t = 0.0
    ev = 0
    while ev < max_events:
        if stop == STOP_AXIS and a == 0:
            return a, b, t, ev, True
        rate = abs(a) + abs(b)
        dt = -math.log(1.0 - rng.random()) / rate
        if t + dt > horizon:
            return a, b, horizon, ev, stop == STOP_HORIZON
        t += dt
        if rng.random() * rate < abs(b):
            a -= 1 if b > 0 else -1
        else:
            b += 1 if a > 0 else -1
        ev += 1
    return a, b, t, ev, False


@njit(cache=True)
def _fast_batch(a0, b0, stop, horizon, max_events, count, rng, oa, ob, ot, od):
    for i in range(count):
        a, b, t, ev, done = _fast_run(a0, b0, stop, horizon, max_events, rng)
        oa[i] = a
        ob[i] = b
        ot[i] = t
        od[i] = done


@dataclass
class FastRun:
    """Outcome of one fast-embedding run."""

    a: int
    b: int
    t: float
    events: int
    done: bool
    path: list[tuple[int, int, float]] | None = None


def simulate_fast(a0: int, b0: int, rng: np.random.Generator, stop: str = "axis",
                  horizon: float = math.inf, record_path: bool = False,
                  max_events: int = 10**9) -> FastRun:
    """One run of the fast embedding from ``(a0, b0)``.

    Parameters
    ----------
    stop : {"axis", "horizon"}
        ``"axis"`` stops at ``tau_f``, the first time ``A = 0`` (``t`` then
        holds ``tau_f``); ``"horizon"`` returns the state at ``horizon``.
    record_path : bool
        Keep the visited ``(a, b, jump time)`` sequence (slow, pure Python).

    Returns
    -------
    FastRun
        ``done`` is False when an axis run passes ``horizon`` unfinished.
    """
    if a0 == 0 and b0 == 0:
        raise ValueError("the origin is not a state")
    if stop not in ("axis", "horizon"):
        raise ValueError("stop must be 'axis' or 'horizon'")
    if stop == "horizon" and not math.isfinite(horizon):
        raise ValueError("a finite horizon is required")
    if not record_path:
        a, b, t, ev, done = _fast_run(np.int64(a0), np.int64(b0),
                                      STOP_AXIS if stop == "axis" else STOP_HORIZON,
                                      float(horizon), np.int64(max_events), rng)
        return FastRun(int(a), int(b), float(t), int(ev), bool(done))
    a, b, t = int(a0), int(b0), 0.0
    path = [(a, b, 0.0)]
    while len(path) <= max_events:
        if stop == "axis" and a == 0:
            return FastRun(a, b, t, len(path) - 1, True, path)
        rate = abs(a) + abs(b)
        dt = rng.exponential(1.0 / rate)
        if t + dt > horizon:
            return FastRun(a, b, float(horizon), len(path) - 1, stop == "horizon", path)
        t += dt
        if rng.random() * rate < abs(b):
            a -= 1 if b > 0 else -1
        else:
            b += 1 if a > 0 else -1
        path.append((a, b, t))
    return FastRun(a, b, t, len(path) - 1, False, path)


def fast_many(a0: int, b0: int, replicas: int, rng: RngLike, stop: str = "axis",
              horizon: float = math.inf, max_events: int = 10**9,
              tag: str = "fast") -> dict[str, np.ndarray]:
    """Batch of fast runs; arrays ``a``, ``b``, ``t`` and ``done``."""
    if a0 == 0 and b0 == 0:
        raise ValueError("the origin is not a state")
    code = STOP_AXIS if stop == "axis" else STOP_HORIZON
    out = {"a": np.empty(replicas, np.int64), "b": np.empty(replicas, np.int64),
           "t": np.empty(replicas), "done": np.empty(replicas, np.bool_)}
    pos = 0
    for g, c in blocks(rng, tag, replicas):
        sl = slice(pos, pos + c)
        _fast_batch(np.int64(a0), np.int64(b0), code, float(horizon), np.int64(max_events),
                    c, g, out["a"][sl], out["b"][sl], out["t"][sl], out["done"][sl])
        pos += c
    return out


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    se: float
    n: int

    def within(self, target: float, k: float = 3.0, slack: float = 0.0) -> bool:
        return abs(self.mean - target) <= k * self.se + slack


def _estimate(x: np.ndarray) -> MeanEstimate:
    return MeanEstimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), int(x.size))


def tau_f_mc(n: int, replicas: int, rng: RngLike) -> dict[str, MeanEstimate]:
    """Monte Carlo ``E_n[tau_f]`` and ``E_n[|tau_f - pi/2|^2]``."""
    r = fast_many(n, 0, replicas, rng, tag="tau-f")
    t = r["t"]
    return {"tau": _estimate(t), "sq_dev": _estimate((t - math.pi / 2) ** 2)}


@dataclass(frozen=True)
class MartingaleResidual:
    """Empirical mean of ``A(t) + iB(t)`` minus ``(a0 + i b0) e^{it}``."""

    re: float
    im: float
    re_se: float
    im_se: float

    def within(self, k: float = 3.0) -> bool:
        return abs(self.re) <= k * self.re_se and abs(self.im) <= k * self.im_se


def martingale_residual(a0: int, b0: int, t: float, replicas: int, rng: RngLike) -> MartingaleResidual:
    """Check the complex martingale ``e^{-it}(A(t) + iB(t))`` at one horizon."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return MartingaleResidual(0.0, 0.0, 0.0, 0.0)
    r = fast_many(a0, b0, replicas, rng, stop="horizon", horizon=t, tag="martingale")
    target = complex(a0, b0) * complex(math.cos(t), math.sin(t))
    a = r["a"].astype(float)
    b = r["b"].astype(float)
    s = math.sqrt(replicas)
    return MartingaleResidual(float(a.mean() - target.real), float(b.mean() - target.imag),
                              float(a.std(ddof=1) / s), float(b.std(ddof=1) / s))


# --------------------------------------------------------------------------
# slow embedding

@njit(cache=True)
def _slow_final(z, rng):
    # competing clocks with rates 1/u and 1/v: V moves first w.p. u / (u + v)
    u = z
    v = 1
    while u > 0:
        if rng.random() * (u + v) < u:
            v += 1
        else:
            u -= 1
    return v


@njit(cache=True)
def _slow_batch(z, count, rng, out):
    for i in range(count):
        out[i] = _slow_final(z, rng)


@njit(cache=True)
def _death_birth_times(z, count, rng, t_death, t_birth):
    # T_z = sum_{k<=z} k xi_k and T'_{z+1} = sum_{k<=z} k zeta_k, from the clocks
    for i in range(count):
        s = 0.0
        for k in range(1, z + 1):
            s += k * -math.log(1.0 - rng.random())
        t_death[i] = s
        s = 0.0
        v = 1
        while v < z + 1:
            s += v * -math.log(1.0 - rng.random())
            v += 1
        t_birth[i] = s


@dataclass
class SlowRun:
    """Jump chain ``(U, V)`` of one slow-embedding run and its clock."""

    states: list[tuple[int, int]]
    times: list[float]

    @property
    def final_v(self) -> int:
        return self.states[-1][1]


def simulate_slow(z: int, rng: np.random.Generator) -> SlowRun:
    """Run ``U`` (death, rate ``1/u``) and ``V`` (birth, rate ``1/v``) from ``(z, 1)`` until ``U = 0``.

    The event clock is simulated explicitly: each state waits an exponential
    time with rate ``1/u + 1/v``.
    """
    if z < 1:
        raise ValueError("z must be positive")
    u, v, t = int(z), 1, 0.0
    states, times = [(u, v)], [0.0]
    while u > 0:
        lu, lv = 1.0 / u, 1.0 / v
        t += rng.exponential(1.0 / (lu + lv))
        if rng.random() * (lu + lv) < lv:
            v += 1
        else:
            u -= 1
        states.append((u, v))
        times.append(t)
    return SlowRun(states, times)


def slow_final_many(z: int, replicas: int, rng: RngLike, tag: str = "slow") -> np.ndarray:
    """Final ``V`` values of ``replicas`` slow runs from ``(z, 1)``."""
    out = np.empty(replicas, np.int64)
    pos = 0
    for g, c in blocks(rng, tag, replicas):
        _slow_batch(np.int64(z), c, g, out[pos:pos + c])
        pos += c
    return out


def death_birth_times(z: int, replicas: int, rng: RngLike) -> tuple[np.ndarray, np.ndarray]:
    """Samples of the extinction time ``T_z`` of ``U`` and the hitting time ``T'_{z+1}`` of ``V``."""
    g = as_generator(rng, "death-birth")
    td = np.empty(replicas)
    tb = np.empty(replicas)
    _death_birth_times(np.int64(z), replicas, g, td, tb)
    return td, tb


# --------------------------------------------------------------------------
# exact polynomials in e

@lru_cache(maxsize=None)
def poly_coefficients(n: int, shift: int) -> tuple[Fraction, ...]:
    """Rational ``c_i`` with ``value = sum_i c_i (e^i - sum_{k<i} i^k / k!)``.

    ``c_i = sum_{x=1}^i i^{n-x-i-shift} i! (-1)^{n-i} / ((n-i)! (i-x)!)``;
    ``shift = 0`` gives the area, ``1`` the traversal time and ``2`` the
    scaled first difference of the time.
    """
    if n < 1:
        raise ValueError("n must be positive")
    out = []
    for i in range(1, n + 1):
        c = Fraction(0)
        for x in range(1, i + 1):
            c += Fraction(i) ** (n - x - i - shift) / math.factorial(i - x)
        sign = -1 if (n - i) % 2 else 1
        out.append(sign * c * math.factorial(i) / math.factorial(n - i))
    return tuple(out)


def _exp_tail(i: int) -> mpmath.mpf:
    # e^i minus its Taylor polynomial of degree i - 1
    s = mpmath.mpf(0)
    term = mpmath.mpf(1)
    for k in range(i):
        if k:
            term = term * i / k
        s += term
    return mpmath.exp(i) - s


def _poly_value(n: int, shift: int) -> mpmath.mpf:
    tot = mpmath.mpf(0)
    for i, c in enumerate(poly_coefficients(n, shift), start=1):
        tot += mpmath.mpf(c.numerator) / c.denominator * _exp_tail(i)
    return tot


def _poly(n: int, shift: int, cfg: PrecisionConfig | None) -> mpmath.mpf:
    cfg = cfg or PrecisionConfig()
    # the alternating outer sum has terms up to roughly e^{2n}
    val, _ = escalate(lambda bits: _poly_value(n, shift), cfg, 64 + 4 * n)
    return val


def tau_f_poly_exact(n: int, cfg: PrecisionConfig | None = None) -> mpmath.mpf:
    """``E_n[tau_f]`` as a degree-``n`` rational polynomial evaluated at ``e``."""
    return _poly(n, 1, cfg)


def area_poly_exact(n: int, cfg: PrecisionConfig | None = None, check: bool = True,
                    tolerance: float = 1e-10) -> mpmath.mpf:
    """Expected area enclosed by one traversal from ``(n, 0)``.

    With ``check`` the identity ``area(n) = sum_{m<=n} m E_m[tau_f]`` is
    asserted to ``tolerance``.
    """
    cfg = cfg or PrecisionConfig()
    val = _poly(n, 0, cfg)
    if check:
        with mpmath.workprec(cfg.bits):
            rhs = mpmath.fsum(m * tau_f_poly_exact(m, cfg) for m in range(1, n + 1))
            if abs(val - rhs) > tolerance:
                raise AssertionError(f"area identity fails at n={n}: {mpmath.nstr(val - rhs, 5)}")
    return val


def tau_f_difference_exact(n: int, cfg: PrecisionConfig | None = None) -> mpmath.mpf:
    """``(E_n[tau_f] - E_{n-1}[tau_f]) / n`` from its own polynomial."""
    return _poly(n, 2, cfg)


def area_identity_residuals(n_max: int = 20, cfg: PrecisionConfig | None = None) -> list[float]:
    """``|area(n) - sum_m m E_m[tau_f]|`` for ``n = 1..n_max``."""
    cfg = cfg or PrecisionConfig()
    out = []
    acc = mpmath.mpf(0)
    for n in range(1, n_max + 1):
        with mpmath.workprec(cfg.bits):
            acc += n * tau_f_poly_exact(n, cfg)
            out.append(float(abs(area_poly_exact(n, cfg, check=False) - acc)))
    return out


@dataclass(frozen=True)
class ErrorProbe:
    """``E_n[tau_f] - pi/2`` for a range of ``n`` with a fitted exponential rate."""

    n: np.ndarray
    error: np.ndarray
    rate: float
    rate_se: float


def fasttime_error_probe(n_min: int = 5, n_max: int = 30,
                         cfg: PrecisionConfig | None = None) -> ErrorProbe:
    """Error sequence of the traversal time against ``pi/2``.

    The rate is the least-squares slope of ``log(sqrt(n) |error|)`` in ``n``;
    an exponentially small error with the first characteristic root would
    give a slope near ``-2.0888``.  Reported only, nothing is asserted.
    """
    cfg = cfg or PrecisionConfig()
    ns = np.arange(n_min, n_max + 1)
    errs = []
    for n in ns:
        with mpmath.workprec(cfg.bits):
            errs.append(float(tau_f_poly_exact(int(n), cfg) - mpmath.pi / 2))
    errs = np.array(errs)
    y = np.log(np.sqrt(ns) * np.abs(errs))
    coef, cov = np.polyfit(ns, y, 1, cov=True)
    return ErrorProbe(ns, errs, float(coef[0]), float(math.sqrt(cov[0, 0])))
