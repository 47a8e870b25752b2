"""Renewal process with uniform inter-arrival times.

``N(t) = min{i >= 0 : S_i > t}`` counts renewals in ``[0, t]`` including the one
at time 0.  Its mean is

    f(t) = sum_{i=0}^{floor t} (i - t)^i e^{t-i} / i!,

which solves ``f'(t) = f(t) - f(t-1)`` with ``f = e^t`` on ``[0, 1]``, and has
the pole expansion ``f(t) = 2t + 2/3 + sum_gamma e^{gamma t} / gamma`` over the
non-zero roots of ``lambda - 1 + e^{-lambda}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from numba import njit

from .precision import PrecisionConfig, PrecisionError, escalate
from .streams import RngLike, blocks


# --------------------------------------------------------------------------
# sampling

@njit(cache=True, inline="always")
def renewal_count(t, rng):
    s = 0.0
    i = 1
    s += rng.random()
    while s <= t:
        s += rng.random()
        i += 1
    return i


@njit(cache=True)
def _renewal_batch(t, count, rng, out):
    for j in range(count):
        out[j] = renewal_count(t, rng)


def sample_renewal_count(t: float, rng: np.random.Generator) -> int:
    """One draw of ``N(t)``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return int(renewal_count(float(t), rng))


def sample_renewal_counts(t: float, size: int, rng: RngLike, tag: str = "renewal") -> np.ndarray:
    """``size`` independent draws of ``N(t)``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    out = np.empty(size, np.int64)
    pos = 0
    for g, c in blocks(rng, tag, size):
        _renewal_batch(float(t), c, g, out[pos:pos + c])
        pos += c
    return out


@dataclass(frozen=True)
class CountMoments:
    t: float
    replicas: int
    mean: float
    mean_se: float
    second_moment: float
    second_moment_se: float
    variance: float
    variance_se: float


def count_moments_mc(t: float, replicas: int, rng: RngLike) -> CountMoments:
    """Monte Carlo mean, second moment and variance of ``N(t)`` with standard errors."""
    if t <= 0 or replicas < 2:
        raise ValueError("need t > 0 and at least two replicas")
    n = sample_renewal_counts(t, replicas, rng).astype(float)
    r = float(replicas)
    mean = n.mean()
    d = n - mean
    m2c = np.mean(d * d)
    m4c = np.mean(d ** 4)
    sq = n * n
    var = m2c * r / (r - 1)
    return CountMoments(
        t=float(t), replicas=replicas,
        mean=float(mean), mean_se=float(math.sqrt(var / r)),
        second_moment=float(sq.mean()), second_moment_se=float(sq.std(ddof=1) / math.sqrt(r)),
        variance=float(var), variance_se=float(math.sqrt(max(m4c - m2c * m2c, 0.0) / r)),
    )


# --------------------------------------------------------------------------
# the renewal function

def _mp(t):
    return t if isinstance(t, mpmath.mpf) else mpmath.mpf(t)


def _series(t) -> mpmath.mpf:
    t = _mp(t)
    tot = mpmath.mpf(0)
    fact = mpmath.mpf(1)
    for i in range(int(mpmath.floor(t)) + 1):
        if i:
            fact *= i
        base = i - t
        term = mpmath.mpf(1) if i == 0 else base ** i
        tot += term * mpmath.exp(t - i) / fact
    return tot


def start_bits(t: float) -> int:
    """Initial precision ``64 + ceil(t log2 t)`` covering the cancellation in the series."""
    t = float(t)
    return 64 + (math.ceil(t * math.log2(t)) if t > 1 else 0)


def renewal_function_exact(t, cfg: PrecisionConfig | None = None) -> mpmath.mpf:
    """``f(t) = E[N(t)]`` from the finite alternating series.

    The series is re-evaluated at doubling precision until two successive
    values agree to ``cfg.target_tol``.
    """
    cfg = cfg or PrecisionConfig()
    if t < 0:
        raise ValueError("t must be non-negative")
    val, _ = escalate(lambda bits: _series(t), cfg, start_bits(float(t)))
    return val


# --------------------------------------------------------------------------
# characteristic roots

@dataclass(frozen=True)
class CharRoot:
    """Upper-half-plane root ``re + i im`` of ``lambda - 1 + e^{-lambda}``."""

    re: mpmath.mpf
    im: mpmath.mpf
    index: int

    @property
    def value(self) -> mpmath.mpc:
        return mpmath.mpc(self.re, self.im)

    def residual(self) -> float:
        with mpmath.workprec(max(mpmath.mp.prec, 128)):
            g = self.value
            return float(abs(g - 1 + mpmath.exp(-g)))


def root_seed(n: int) -> complex:
    return complex(-math.log(2 * math.pi * n), (2 * n + 0.5) * math.pi)


def _newton(seed, tol, max_iter=200):
    lam = mpmath.mpc(seed)
    for _ in range(max_iter):
        e = mpmath.exp(-lam)
        step = (lam - 1 + e) / (1 - e)
        lam -= step
        if abs(step) < tol:
            return lam
    raise PrecisionError("Newton iteration did not converge")


def char_roots(count: int, cfg: PrecisionConfig | None = None) -> list[CharRoot]:
    """First ``count`` roots with positive imaginary part, ordered by ``im``.

    Newton iteration on ``g(l) = l - 1 + e^{-l}`` from the seeds
    ``-log(2 pi n) + (2n + 1/2) pi i``.
    """
    if count < 1:
        raise ValueError("count must be positive")
    cfg = cfg or PrecisionConfig()
    out = []
    with mpmath.workprec(cfg.bits):
        tol = mpmath.mpf(2) ** (-cfg.bits + 8)
        for n in range(1, count + 1):
            lam = _newton(root_seed(n), tol)
            r = CharRoot(+lam.real, +lam.imag, n)
            if r.residual() >= 1e-12 or r.im <= 0:
                raise PrecisionError(f"root {n} failed to converge")
            out.append(r)
    out.sort(key=lambda r: r.im)
    for a, b in zip(out, out[1:]):
        if abs(a.value - b.value) <= 1:
            raise PrecisionError("duplicate root")
    return out


def count_roots_in_strip(K: int, samples_per_unit: int = 400) -> int:
    """Zeros of ``g`` with ``1 < im < (2K + 1/2) pi + 1`` by the argument principle.

    The winding number of ``g`` around a rectangle whose left edge lies far
    beyond every root of the strip is evaluated on a fine polygon.
    """
    top = (2 * K + 0.5) * math.pi + 1
    left = -(math.log(2 * math.pi * (K + 1)) + 6)
    right = 2.0
    corners = [complex(right, 1), complex(right, top), complex(left, top), complex(left, 1),
               complex(right, 1)]
    pts = []
    for a, b in zip(corners, corners[1:]):
        k = max(16, int(abs(b - a) * samples_per_unit))
        pts.append(a + (b - a) * np.arange(k) / k)
    z = np.concatenate(pts + [np.array([corners[0]])])
    g = z - 1 + np.exp(-z)
    turn = np.angle(g[1:] / g[:-1]).sum()
    return int(round(turn / (2 * math.pi)))


def renewal_function_asymptotic(t, pole_pairs: int, cfg: PrecisionConfig | None = None,
                                roots: list[CharRoot] | None = None) -> mpmath.mpf:
    """``2t + 2/3`` plus the first ``pole_pairs`` conjugate pole pairs."""
    if t <= 0:
        raise ValueError("the expansion needs t > 0")
    cfg = cfg or PrecisionConfig()
    roots = roots if roots is not None else char_roots(pole_pairs, cfg)
    with mpmath.workprec(cfg.bits):
        t = _mp(t)
        tot = 2 * t + mpmath.mpf(2) / 3
        for r in roots[:pole_pairs]:
            g = r.value
            tot += 2 * (mpmath.exp(g * t) / g).real
        return +tot


def dominant_correction(t, root: CharRoot | None = None) -> mpmath.mpf:
    """Leading oscillating term ``2 Re(e^{gamma_1 t} / gamma_1)``."""
    root = root or char_roots(1)[0]
    a, b = root.re, root.im
    t = _mp(t)
    return 2 * mpmath.exp(a * t) * (b * mpmath.sin(b * t) + a * mpmath.cos(b * t)) / (a * a + b * b)


# --------------------------------------------------------------------------
# auxiliary checks

def delay_residual(t: float, h: float = 1e-6, cfg: PrecisionConfig | None = None) -> float:
    """Central difference of ``f`` minus ``f(t) - f(t - 1)``."""
    cfg = cfg or PrecisionConfig(bits=256, target_tol=1e-40)
    with mpmath.workprec(cfg.bits):
        t_, h_ = mpmath.mpf(t), mpmath.mpf(h)
        fp = renewal_function_exact(t_ + h_, cfg)
        fm = renewal_function_exact(t_ - h_, cfg)
        d = (fp - fm) / (2 * h_)
        return float(d - (renewal_function_exact(t_, cfg) - renewal_function_exact(t_ - 1, cfg)))


def mgf_log_margins(lams) -> tuple[np.ndarray, np.ndarray]:
    """Margins ``bound - log phi(-+l)`` for the uniform mgf ``phi(l) = (e^l - 1)/l``.

    Non-negative entries mean the quadratic bounds hold.
    """
    lo, hi = [], []
    with mpmath.workdps(40):
        for lam in lams:
            l = mpmath.mpf(lam)
            lphi_m = mpmath.log(-mpmath.expm1(-l) / l)
            lphi_p = mpmath.log(mpmath.expm1(l) / l)
            lo.append(float(-l / 2 + l * l / 24 - lphi_m))
            hi.append(float(l / 2 + l * l / 24 - lphi_p))
    return np.array(lo), np.array(hi)
