"""Random walk across the positive quadrant with a general step law.

From ``(a, 0)`` the walk takes jumps ``(-X', X)`` until its first coordinate
is negative, at ``(-r, s)`` say, and then restarts from ``(s, 0)``.  Crossing
``k`` takes ``T_k = N(R_{k-1})`` steps, where ``N(x) = min{n : S'_n > x}`` is
the renewal count of the ``X'`` sums, and the next start is
``R_k = S_{T_k}``.  The walk is transient exactly when ``mu^2 > sigma^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from numba import njit

from .streams import RngLike, as_generator, blocks

LAW_CODES = {"uniform01": 0, "exponential": 1, "erlang2": 2, "sqrt-uniform": 3}
CUSTOM = -1

TRANSIENT = "transient"
RECURRENT = "recurrent"
NEAR_CRITICAL = "near-critical"

#: relative gap |mu^2 - sigma^2| / (mu^2 + sigma^2) below which no verdict is given
CRITICAL_GUARD = 0.02


@dataclass(frozen=True)
class IncrementLaw:
    """Law of the non-negative step ``X``.

    Attributes
    ----------
    kind : str
        ``uniform01``, ``exponential`` (rate 1), ``erlang2`` (sum of two rate-1
        exponentials), ``sqrt-uniform`` (``U^(1/2)``) or ``custom``.
    mean, variance : Fraction or float
        ``mu`` and ``sigma^2``; exact fractions for the named laws.
    fourth_moment_ok : bool
        Whether ``E[X^4]`` is finite.
    sampler : callable, optional
        ``sampler(rng, size) -> ndarray`` for custom laws.
    """

    kind: str
    mean: Fraction | float
    variance: Fraction | float
    fourth_moment_ok: bool = True
    sampler: Callable[[np.random.Generator, int], np.ndarray] | None = field(
        default=None, compare=False, repr=False)

    def __post_init__(self):
        if not (0 < self.mean < math.inf and 0 < self.variance < math.inf):
            raise ValueError("need 0 < mu, sigma^2 < infinity")
        if self.kind == "custom" and self.sampler is None:
            raise ValueError("a custom law needs a sampler")
        if self.kind != "custom" and self.kind not in LAW_CODES:
            raise ValueError(f"unknown law {self.kind!r}")

    @classmethod
    def named(cls, kind: str) -> "IncrementLaw":
        table = {
            "uniform01": (Fraction(1, 2), Fraction(1, 12)),
            "exponential": (Fraction(1), Fraction(1)),
            "erlang2": (Fraction(2), Fraction(2)),
            "sqrt-uniform": (Fraction(2, 3), Fraction(1, 18)),
        }
        if kind not in table:
            raise ValueError(f"unknown law {kind!r}; expected one of {sorted(table)}")
        mu, var = table[kind]
        return cls(kind, mu, var)

    @classmethod
    def custom(cls, sampler, mean, variance, fourth_moment_ok: bool = True) -> "IncrementLaw":
        return cls("custom", mean, variance, fourth_moment_ok, sampler)

    @property
    def code(self) -> int:
        return LAW_CODES.get(self.kind, CUSTOM)

    @property
    def gap(self):
        """``mu^2 - sigma^2``."""
        return self.mean ** 2 - self.variance

    @property
    def relative_gap(self) -> float:
        return float(abs(self.gap) / (self.mean ** 2 + self.variance))

    @property
    def drift_limit(self) -> float:
        """Limit ``(mu^2 - sigma^2) / (2 mu)`` of the square-root drift statistic."""
        return float(self.gap / (2 * self.mean))

    @property
    def delta_mean_limit(self) -> float:
        """``(sigma^2 + mu^2) / (2 mu)``, the limit of ``E[Delta(x)]``."""
        return float((self.variance + self.mean ** 2) / (2 * self.mean))

    @property
    def delta_second_slope(self) -> float:
        """``2 sigma^2 / mu``, the slope of ``E[Delta(x)^2]`` in ``x``."""
        return float(2 * self.variance / self.mean)


# --------------------------------------------------------------------------
# kernels for the named laws

@njit(cache=True, inline="always")
def _draw(code, rng):
    if code == 0:
        return rng.random()
    if code == 1:
        return rng.standard_exponential()
    if code == 2:
        return rng.standard_exponential() + rng.standard_exponential()
    return math.sqrt(rng.random())


@njit(cache=True, inline="always")
def _count(code, x, rng):
    # N(x): number of X' draws until the running sum exceeds x
    s = 0.0
    n = 0
    while s <= x:
        s += _draw(code, rng)
        n += 1
    return n


@njit(cache=True, inline="always")
def _sum(code, m, rng):
    s = 0.0
    for _ in range(m):
        s += _draw(code, rng)
    return s


@njit(cache=True)
def _crossings(code, a0, crossings, rng, t_out, r_out):
    r = a0
    for k in range(crossings):
        t = _count(code, r, rng)
        r = _sum(code, t, rng)
        t_out[k] = t
        r_out[k] = r


@njit(cache=True)
def _paths_batch(code, init_n, a0, crossings, count, rng, t_out, r_out):
    # init_n > 0: start from a sum of init_n steps (Irwin-Hall for uniform01)
    for i in range(count):
        r = _sum(code, init_n, rng) if init_n > 0 else a0
        for k in range(crossings):
            t = _count(code, r, rng)
            r = _sum(code, t, rng)
            t_out[i, k] = t
            r_out[i, k] = r


@njit(cache=True)
def _delta_batch(code, x, count, rng, out):
    for i in range(count):
        out[i] = _sum(code, _count(code, x, rng), rng) - x


@njit(cache=True)
def _transition_batch(code, m, count, rng, out):
    for i in range(count):
        out[i] = _count(code, _sum(code, m, rng), rng)


# --------------------------------------------------------------------------
# generic path for custom samplers

def _py_count(law: IncrementLaw, x: float, rng: np.random.Generator) -> int:
    chunk = max(16, int(1.2 * x / float(law.mean)) + 16)
    done, total = 0, 0.0
    while True:
        c = np.cumsum(law.sampler(rng, chunk)) + total
        j = int(np.searchsorted(c, x, side="right"))
        if j < chunk:
            return done + j + 1
        done += chunk
        total = float(c[-1])


def _py_sum(law: IncrementLaw, m: int, rng: np.random.Generator) -> float:
    return float(np.sum(law.sampler(rng, m))) if m else 0.0


# --------------------------------------------------------------------------
# public API

@dataclass(frozen=True)
class Crossings:
    """Crossing lengths ``T_k`` and restart heights ``R_k`` for ``k = 1..K``."""

    a0: float
    T: np.ndarray
    R: np.ndarray

    def rows(self):
        return [(k + 1, int(t), float(r)) for k, (t, r) in enumerate(zip(self.T, self.R))]


def simulate_crossings(law: IncrementLaw, a0: float, crossings: int,
                       rng: RngLike) -> Crossings:
    """Run ``crossings`` quadrant crossings from ``(a0, 0)``.

    Parameters
    ----------
    law : IncrementLaw
    a0 : float
        Positive starting height.
    crossings : int
    rng : seed or Generator

    Returns
    -------
    Crossings
    """
    if not a0 > 0:
        raise ValueError("a0 must be positive")
    if crossings < 0:
        raise ValueError("crossings must be non-negative")
    g = as_generator(rng, "quadrant")
    t = np.empty(crossings, np.int64)
    r = np.empty(crossings)
    if law.code == CUSTOM:
        x = float(a0)
        for k in range(crossings):
            t[k] = _py_count(law, x, g)
            x = r[k] = _py_sum(law, int(t[k]), g)
    else:
        _crossings(law.code, float(a0), crossings, g, t, r)
    return Crossings(float(a0), t, r)


def crossing_paths(law: IncrementLaw, crossings: int, replicas: int, rng: RngLike,
                   a0: float | None = None, irwin_hall: int | None = None,
                   tag: str = "quadrant-paths") -> tuple[np.ndarray, np.ndarray]:
    """``(T, R)`` arrays of shape ``(replicas, crossings)``.

    The start is either the fixed height ``a0`` or, with ``irwin_hall=n``, an
    independent sum of ``n`` draws of ``X`` per replica (the sum of ``n``
    uniforms when ``X`` is uniform).
    """
    if (a0 is None) == (irwin_hall is None):
        raise ValueError("give exactly one of a0 and irwin_hall")
    if law.code == CUSTOM:
        raise NotImplementedError("batched paths need a named law")
    T = np.empty((replicas, crossings), np.int64)
    R = np.empty((replicas, crossings))
    pos = 0
    for g, c in blocks(rng, tag, replicas):
        _paths_batch(law.code, int(irwin_hall or 0), float(a0 or 0.0), crossings, c, g,
                     T[pos:pos + c], R[pos:pos + c])
        pos += c
    return T, R


def delta_samples(law: IncrementLaw, x: float, samples: int, rng: RngLike,
                  tag: str = "quadrant-delta") -> np.ndarray:
    """Draws of ``Delta(x) = S_{N(x)} - x``."""
    if x < 0:
        raise ValueError("x must be non-negative")
    out = np.empty(samples)
    if law.code == CUSTOM:
        g = as_generator(rng, tag)
        for i in range(samples):
            out[i] = _py_sum(law, _py_count(law, x, g), g) - x
        return out
    pos = 0
    for g, c in blocks(rng, tag, samples):
        _delta_batch(law.code, float(x), c, g, out[pos:pos + c])
        pos += c
    return out


@dataclass(frozen=True)
class DeltaMoments:
    x: float
    samples: int
    mean: float
    mean_se: float
    second_moment: float
    second_moment_se: float


def delta_moments(law: IncrementLaw, x: float, samples: int, rng: RngLike) -> DeltaMoments:
    """Monte Carlo mean and second moment of ``Delta(x)`` with standard errors."""
    if not law.fourth_moment_ok:
        raise ValueError("the moment expansion needs E[X^4] < infinity")
    if samples < 2:
        raise ValueError("need at least two samples")
    d = delta_samples(law, x, samples, rng)
    sq = d * d
    r = math.sqrt(samples)
    return DeltaMoments(float(x), samples, float(d.mean()), float(d.std(ddof=1) / r),
                        float(sq.mean()), float(sq.std(ddof=1) / r))


def transition_samples(law: IncrementLaw, m: int, samples: int, rng: RngLike,
                       tag: str = "quadrant-transition") -> np.ndarray:
    """Draws of ``T_{k+1}`` given ``T_k = m``.

    Given ``T_k = m`` the restart height is a sum of ``m`` fresh draws of ``X``
    (the ``X`` steps are independent of the ``X'`` steps that fixed ``T_k``).
    """
    if m < 1:
        raise ValueError("crossing lengths are at least 1")
    out = np.empty(samples, np.int64)
    if law.code == CUSTOM:
        g = as_generator(rng, tag)
        for i in range(samples):
            out[i] = _py_count(law, _py_sum(law, m, g), g)
        return out
    pos = 0
    for g, c in blocks(rng, tag, samples):
        _transition_batch(law.code, int(m), c, g, out[pos:pos + c])
        pos += c
    return out


def negative_binomial_pmf(j: int, m: int) -> Fraction:
    """``C(j+m, m) 2^(-m-j-1)`` for ``j >= 0``."""
    if j < 0:
        return Fraction(0)
    return Fraction(math.comb(j + m, m), 2 ** (m + j + 1))


def exponential_transition_pmf(j: int, m: int) -> Fraction:
    """``P(T_{k+1} = j | T_k = m)`` for rate-1 exponential steps.

    The restart height is Gamma(m), and ``N(x) - 1`` is Poisson(x), so
    ``T_{k+1} - 1`` is negative binomial with ``m`` successes:
    ``P(T_{k+1} - 1 = i) = C(i+m-1, m-1) 2^(-m-i)``.  In the shifted
    variables ``T - 1`` this is ``negative_binomial_pmf(j - 1, m - 1)``.
    """
    return negative_binomial_pmf(j - 1, m - 1)


# --------------------------------------------------------------------------
# classification

@dataclass(frozen=True)
class DriftPoint:
    """The statistic ``2y mu1(y) - mu2(y)`` for ``V = R^(1/2)`` at level ``y``."""

    y: float
    mu1: float
    mu2: float
    statistic: float
    se: float
    samples: int


def sqrt_drift(law: IncrementLaw, y: float, samples: int, rng: RngLike,
               tag: str = "quadrant-drift") -> DriftPoint:
    """Increment moments of ``V_n = R_n^(1/2)`` from ``V_n = y``."""
    d = delta_samples(law, y * y, samples, rng, tag)
    dv = np.sqrt(np.maximum(y * y + d, 0.0)) - y
    q = 2 * y * dv - dv * dv
    return DriftPoint(float(y), float(dv.mean()), float((dv * dv).mean()),
                      float(q.mean()), float(q.std(ddof=1) / math.sqrt(samples)), samples)


@dataclass(frozen=True)
class QuadrantVerdict:
    """Classification of the quadrant walk for one step law.

    ``verdict`` comes from the exact comparison of ``mu^2`` and ``sigma^2``;
    the drift points corroborate it empirically.
    """

    law: str
    mu: float
    sigma2: float
    verdict: str
    near_critical: bool
    drift_limit: float
    drift: tuple[DriftPoint, ...]
    sign_agrees: bool | None

    @property
    def top(self) -> DriftPoint:
        return self.drift[-1]

    def to_dict(self) -> dict:
        t = self.top
        return {
            "law": self.law, "mu": self.mu, "sigma2": self.sigma2, "verdict": self.verdict,
            "near_critical": self.near_critical, "drift_limit": self.drift_limit,
            "drift": [{"y": p.y, "mu1": p.mu1, "mu2": p.mu2, "statistic": p.statistic,
                       "se": p.se, "samples": p.samples} for p in self.drift],
            "top_statistic": t.statistic, "top_se": t.se, "sign_agrees": self.sign_agrees,
        }


def verdict_from_moments(mu, sigma2) -> tuple[str, bool]:
    """Verdict and near-critical flag from ``mu`` and ``sigma^2``.

    Exactly critical laws (``mu^2 == sigma^2``) are recurrent.  Laws within
    the relative guard but not exactly critical get no verdict.
    """
    gap = mu * mu - sigma2
    near = abs(gap) / (mu * mu + sigma2) < CRITICAL_GUARD
    if gap == 0:
        return RECURRENT, True
    if near:
        return NEAR_CRITICAL, True
    return (TRANSIENT if gap > 0 else RECURRENT), False


def classify_quadrant(law: IncrementLaw, budget: int = 200_000, rng: RngLike = 0,
                      y_grid=(10.0, 20.0), k: float = 3.0) -> QuadrantVerdict:
    """Classify the walk and corroborate with the square-root drift statistic.

    Parameters
    ----------
    law : IncrementLaw
    budget : int
        Samples per grid level.
    rng : seed or Generator
    y_grid : sequence of float
        Levels ``y`` of ``V``; the last one is used for the sign check.
    k : float
        Width of the band, in standard errors, that must exclude 0 for the
        sign check to count.

    Returns
    -------
    QuadrantVerdict
        ``sign_agrees`` is ``None`` when the band at the top level contains 0
        (always the case for an exactly critical law, whose limit is 0).
    """
    if not law.fourth_moment_ok:
        raise ValueError("classification needs E[X^4] < infinity")
    verdict, near = verdict_from_moments(law.mean, law.variance)
    pts = tuple(sqrt_drift(law, y, budget, rng, tag=f"quadrant-drift-{i}")
                for i, y in enumerate(y_grid))
    top = pts[-1]
    if abs(top.statistic) <= k * top.se:
        agrees = None
    elif verdict == NEAR_CRITICAL:
        agrees = None
    else:
        agrees = (top.statistic > 0) == (verdict == TRANSIENT)
    return QuadrantVerdict(law.kind, float(law.mean), float(law.variance), verdict, near,
                           law.drift_limit, pts, agrees)
