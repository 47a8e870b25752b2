"""Exact transition law of the embedded chain ``Z_k``.

``p(n, m) = P(Z_{k+1} = m | Z_k = n) = m A(n+m-1, n) / (n+m)!`` with
``A`` the Eulerian numbers.  Everything here is exact rational arithmetic;
infinite sums are truncated with a certified exponential tail bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

_EULER: list[list[int]] = [[], [1]]


def eulerian(n: int, k: int) -> int:
    """Eulerian number ``A(n, k)``: permutations of ``n`` items with ``k - 1`` descents.

    Parameters
    ----------
    n : int
        Positive size.
    k : int
        Index in ``[1, n]``.
    """
    if n < 1 or not 1 <= k <= n:
        raise ValueError(f"A({n}, {k}) is outside 1 <= k <= n")
    while len(_EULER) <= n:
        prev = _EULER[-1]
        m = len(_EULER)
        row = []
        for j in range(1, m + 1):
            a = prev[j - 2] if j >= 2 else 0
            b = prev[j - 1] if j <= m - 1 else 0
            row.append((m - j + 1) * a + j * b)
        _EULER.append(row)
    return _EULER[n][k - 1]


def eulerian_alternating(n: int, k: int) -> int:
    """``A(n, k)`` from ``sum_i (-1)^i C(n+1, i) (k-i)^n``."""
    return sum((-1) ** i * math.comb(n + 1, i) * (k - i) ** n for i in range(k + 1))


def _check_nm(n, m, m_min=1):
    if n < 1 or m < m_min:
        raise ValueError(f"need n >= 1 and m >= {m_min}")


@lru_cache(maxsize=None)
def _p_euler(n: int, m: int) -> Fraction:
    return Fraction(m * eulerian(n + m - 1, n), math.factorial(n + m))


def p_alternating(n: int, m: int) -> Fraction:
    """``p(n, m)`` from the alternating sum over ``r``; exact only."""
    s = n + m
    tot = sum((-1) ** r * math.comb(s, r) * (m - r) ** (s - 1) for r in range(m + 1))
    return Fraction(m * tot, math.factorial(s))


def p_exact(n: int, m: int, check: bool = True) -> Fraction:
    """Exact ``P(Z_{k+1} = m | Z_k = n)``.

    Both the Eulerian and the alternating-sum forms are evaluated when
    ``check`` is set, and must coincide.
    """
    _check_nm(n, m)
    p = _p_euler(n, m)
    if check and p != p_alternating(n, m):
        raise ArithmeticError(f"closed forms disagree at ({n}, {m})")
    return p


@lru_cache(maxsize=None)
def survival_exact(n: int, m: int) -> Fraction:
    """Exact ``P(Z_{k+1} > m | Z_k = n)``."""
    _check_nm(n, m, m_min=0)
    s = n + m
    tot = sum((-1) ** i * math.comb(s, i) * (n - i) ** s for i in range(n + 1))
    return Fraction(tot, math.factorial(s))


# --------------------------------------------------------------------------
# tail certificates

def tail_bound(n: int, M: int) -> float:
    """Upper bound on ``P(Z_{k+1} > M | Z_k = n)``: ``2 exp(-3x^2/(4n+2x))``, ``x = M - n``."""
    x = M - n
    if x <= 0:
        return 1.0
    return min(1.0, 2.0 * math.exp(-3.0 * x * x / (4.0 * n + 2.0 * x)) * (1 + 1e-12))


def _decay_rate(n: int, M: int) -> float:
    # derivative of the (convex) exponent at x = M - n
    x = M - n
    return 6.0 * x * (4.0 * n + x) / (4.0 * n + 2.0 * x) ** 2


def moment_tail_bound(n: int, M: int, power: int) -> float:
    """Bound on ``E[Z^power ; Z > M]`` for ``power`` in {0, 1, 2}, ``M > n``."""
    b = tail_bound(n, M)
    if power == 0:
        return b
    r = math.exp(-_decay_rate(n, M))
    g = 1.0 / (1.0 - r)
    if power == 1:
        return b * (M + g)
    if power == 2:
        return b * (M * M + (2 * M + 1) * g + 2 * r * g * g)
    raise ValueError("power must be 0, 1 or 2")


def truncation_point(n: int, tol: float, power: int = 0, cap: int = 100_000) -> int:
    """Least ``M >= n + 1`` whose certified ``power``-moment tail is below ``tol``."""
    M = n + 1
    while moment_tail_bound(n, M, power) >= tol:
        M += 1
        if M - n > cap:
            raise ValueError(f"tolerance {tol} unreachable within truncation cap")
    return M


# --------------------------------------------------------------------------
# rows and moments

@dataclass(frozen=True)
class TransitionRow:
    """Exact ``p(n, m)`` for ``1 <= m <= M`` with a certified tail bound."""

    n: int
    probs: dict
    tail_bound: float

    @property
    def M(self) -> int:
        return max(self.probs)

    def r(self, m: int) -> Fraction:
        """``(n + m) p(n, m) / m``."""
        return (self.n + m) * self.probs[m] / m

    def partial_sum(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0))

    def brackets_one(self) -> bool:
        s = self.partial_sum()
        return s <= 1 and float(s) + self.tail_bound >= 1.0


def transition_row(n: int, tail: float = 1e-12, check: bool = False) -> TransitionRow:
    """Row of the transition law truncated where the certified tail is below ``tail``."""
    _check_nm(n, 1)
    M = truncation_point(n, tail)
    probs = {m: p_exact(n, m, check=check) for m in range(1, M + 1)}
    return TransitionRow(n, probs, tail_bound(n, M))


@dataclass(frozen=True)
class Certified:
    """Non-negative series value known to lie in ``[lower, lower + tail]``."""

    lower: Fraction
    tail: float

    @property
    def value(self) -> mpmath.mpf:
        return mpmath.mpf(self.lower.numerator) / self.lower.denominator

    def __float__(self) -> float:
        return float(self.lower)


def _moment(n: int, tol: float, power: int) -> Certified:
    _check_nm(n, 1)
    M = truncation_point(n, tol, power)
    s = sum((m ** power * _p_euler(n, m) for m in range(1, M + 1)), Fraction(0))
    return Certified(s, moment_tail_bound(n, M, power))


def mean_exact(n: int, tolerance: float = 1e-15) -> Certified:
    """``E[Z_{k+1} | Z_k = n]`` with a certified truncation error below ``tolerance``."""
    return _moment(n, tolerance, 1)


def second_moment_exact(n: int, tolerance: float = 1e-15) -> Certified:
    """``E[Z_{k+1}^2 | Z_k = n]``; checks ``E[Z^2] = n^2 + n + E[Z]`` to the certified error."""
    c2 = _moment(n, tolerance, 2)
    c1 = _moment(n, tolerance, 1)
    resid = abs(float(c2.lower - n * n - n - c1.lower))
    if resid > c1.tail + c2.tail + tolerance:
        raise ArithmeticError(f"second-moment identity fails at n={n}: {resid}")
    return c2


def second_moment_residual(n: int, tolerance: float = 1e-15) -> float:
    """Certified bound on ``|E[Z^2] - n^2 - n - E[Z]|``."""
    c2 = _moment(n, tolerance, 2)
    c1 = _moment(n, tolerance, 1)
    return abs(float(c2.lower - n * n - n - c1.lower)) + c1.tail + c2.tail


def _recip_sum(n: int, tol: float, fn) -> Certified:
    M = truncation_point(n, tol)
    s = sum((fn(m) * _p_euler(n, m) for m in range(1, M + 1)), Fraction(0))
    # every omitted term has fn(m) <= 1/(M+1)
    return Certified(s, tail_bound(n, M) / (M + 1))


def mean_recip(n: int, tol: float = 1e-15) -> Certified:
    """``E_n[1/Z]``."""
    return _recip_sum(n, tol, lambda m: Fraction(1, m))


def mean_recip_cubic(n: int, tol: float = 1e-15) -> Certified:
    """``E_n[1/(Z^2 (Z+1))]``."""
    return _recip_sum(n, tol, lambda m: Fraction(1, m * m * (m + 1)))


def mean_recip_formula(n: int, dps: int = 50) -> mpmath.mpf:
    """``E_n[1/Z]`` as a polynomial in ``e`` with rational coefficients."""
    with mpmath.workdps(dps + 2 * n):
        tot = mpmath.mpf(0)
        for i in range(1, n + 1):
            coef = Fraction((-1) ** (n - i), math.factorial(n - i)) * Fraction(i) ** (n - i - 1)
            partial = sum((Fraction(i ** k, math.factorial(k)) for k in range(i + 1)), Fraction(0))
            term = mpmath.exp(i) - mpmath.mpf(partial.numerator) / partial.denominator
            tot += mpmath.mpf(coef.numerator) / coef.denominator * term
        return +tot


def h_transience(x) -> Fraction:
    """``h(x) = 1/x - 1/(x^2 (x+1))``."""
    x = Fraction(x)
    return 1 / x - 1 / (x * x * (x + 1))


def recip_identities(n: int, tol: float = 1e-15) -> dict:
    """Check both reciprocal-moment identities at ``n`` and the transience margin.

    Returns
    -------
    dict
        Certified values, identity residuals (with their certified allowances)
        and ``h(n) - E_n[h(Z)]``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    r_n, r_m = mean_recip(n, tol), mean_recip(n - 1, tol)
    c_n = mean_recip_cubic(n, tol)
    e_n, e_m = mean_exact(n, tol), mean_exact(n - 1, tol)
    res1 = abs(float(r_n.lower - (e_n.lower - e_m.lower) / n))
    allow1 = r_n.tail + (e_n.tail + e_m.tail) / n
    res2 = abs(float(c_n.lower - (r_m.lower - r_n.lower) / n))
    allow2 = c_n.tail + (r_m.tail + r_n.tail) / n
    formula = mean_recip_formula(n)
    margin = h_transience(n) - (r_n.lower - c_n.lower)
    return {
        "n": n,
        "E_recip": float(r_n.lower),
        "E_recip_formula": float(formula),
        "formula_residual": abs(float(formula - r_n.value)),
        "E_recip_cubic": float(c_n.lower),
        "identity_recip_residual": res1,
        "identity_recip_allowance": allow1 + tol,
        "identity_cubic_residual": res2,
        "identity_cubic_allowance": allow2 + tol,
        "transience_margin": float(margin),
        "transience_margin_error": r_n.tail + c_n.tail,
        "ok": res1 <= allow1 + tol and res2 <= allow2 + tol,
    }


# --------------------------------------------------------------------------
# identity report

def identity_report(max_n: int = 40, rec_max: int = 30) -> list[dict]:
    """Exact residuals of the structural identities of ``p`` on ``[1, max_n]^2``."""
    rng = range(1, max_n + 1)
    db = max(abs(n * p_exact(n, m, check=False) - m * p_exact(m, n, check=False))
             for n in rng for m in rng)
    rec = Fraction(0)
    for n in range(2, rec_max + 1):
        for m in range(2, rec_max + 1):
            lhs = Fraction(n + m, m) * _p_euler(n, m)
            rhs = _p_euler(n - 1, m) + Fraction(n, m - 1) * _p_euler(n, m - 1)
            rec = max(rec, abs(lhs - rhs))
    med = max(abs(sum((_p_euler(n, m) for m in range(1, n + 1)), Fraction(0)) - Fraction(1, 2))
              for n in rng)
    surv = max(abs(survival_exact(n, n) - Fraction(1, 2)) for n in rng)
    alt = max(abs(_p_euler(n, m) - p_alternating(n, m)) for n in rng for m in rng)
    cdf = max(abs(survival_exact(n, m - 1) - survival_exact(n, m) - _p_euler(n, m))
              for n in rng for m in rng)
    tails = []
    for n in rng:
        row = transition_row(n, 1e-12)
        tails.append(1 - float(row.partial_sum()))
    return [
        {"identity_name": "detailed_balance", "max_residual": float(db), "range": [1, max_n]},
        {"identity_name": "recurrence", "max_residual": float(rec), "range": [2, rec_max]},
        {"identity_name": "median_half", "max_residual": float(med), "range": [1, max_n]},
        {"identity_name": "survival_diagonal_half", "max_residual": float(surv), "range": [1, max_n]},
        {"identity_name": "alternating_form", "max_residual": float(alt), "range": [1, max_n]},
        {"identity_name": "survival_differences", "max_residual": float(cdf), "range": [1, max_n]},
        {"identity_name": "row_tail", "max_residual": max(tails), "range": [1, max_n]},
    ]
