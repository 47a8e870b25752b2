"""Laws of the discard variable applied at each axis hit of the noisy urn."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

KIND_CODES = {"point-mass": 0, "two-point": 0, "explicit-pmf": 0, "geometric": 1}


def alias_table(probs) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias table for a finite pmf.

    Returns
    -------
    prob, alias : ndarray
        Acceptance thresholds and alias indices; draw ``j`` uniformly, keep it
        if ``u < prob[j]`` else take ``alias[j]``.
    """
    p = np.asarray(probs, dtype=float)
    n = p.size
    scaled = p * n / p.sum()
    prob = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, g = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = scaled[g] + scaled[s] - 1.0
        (small if scaled[g] < 1.0 else large).append(g)
    return prob, alias


@dataclass(frozen=True)
class KappaSpec:
    """Distribution of kappa.

    Attributes
    ----------
    kind : str
        ``point-mass``, ``two-point``, ``geometric`` or ``explicit-pmf``.
    params : tuple
        Point mass ``(k,)``; two-point ``(a, b, P(a))``; geometric
        ``(p, shift)`` for ``shift + G`` with ``P(G=j) = (1-p)^j p``;
        explicit pmf ``((k, P(k)), ...)``.
    mean : Fraction
        Exact mean.
    mgf_ok : bool
        Whether ``E exp(lambda |kappa|)`` is finite for some positive lambda.
    """

    kind: str
    params: tuple
    mean: Fraction
    mgf_ok: bool = True
    _support: tuple = field(default=(), repr=False, compare=False)

    # constructors ------------------------------------------------------
    @classmethod
    def point(cls, k: int) -> "KappaSpec":
        return cls("point-mass", (int(k),), Fraction(int(k)), True, ((int(k), Fraction(1)),))

    @classmethod
    def two_point(cls, a: int, b: int, p_a) -> "KappaSpec":
        p_a = Fraction(p_a)
        if not 0 <= p_a <= 1:
            raise ValueError("probability outside [0, 1]")
        sup = ((int(a), p_a), (int(b), 1 - p_a))
        return cls("two-point", (int(a), int(b), p_a), a * p_a + b * (1 - p_a), True, sup)

    @classmethod
    def geometric(cls, p, shift: int = 0) -> "KappaSpec":
        p = Fraction(p)
        if not 0 < p <= 1:
            raise ValueError("geometric parameter must lie in (0, 1]")
        return cls("geometric", (p, int(shift)), shift + (1 - p) / p, True)

    @classmethod
    def pmf(cls, table) -> "KappaSpec":
        items = tuple(sorted((int(k), Fraction(v)) for k, v in dict(table).items()))
        if sum(v for _, v in items) != 1 or any(v < 0 for _, v in items):
            raise ValueError("pmf must be non-negative and sum to 1")
        mean = sum(k * v for k, v in items)
        return cls("explicit-pmf", items, mean, True, items)

    @classmethod
    def parse(cls, text: str) -> "KappaSpec":
        """Parse ``point:k``, ``twopoint:a:b:p``, ``geometric:p[:shift]`` or
        ``pmf:k=p,k=p,...``."""
        head, _, rest = text.partition(":")
        parts = rest.split(":") if rest else []
        try:
            if head == "point" and len(parts) == 1:
                return cls.point(int(parts[0]))
            if head == "twopoint" and len(parts) == 3:
                return cls.two_point(int(parts[0]), int(parts[1]), Fraction(parts[2]))
            if head == "geometric" and len(parts) in (1, 2):
                return cls.geometric(Fraction(parts[0]), int(parts[1]) if len(parts) == 2 else 0)
            if head == "pmf" and rest:
                tab = {}
                for item in rest.split(","):
                    k, v = item.split("=")
                    tab[int(k)] = tab.get(int(k), 0) + Fraction(v)
                return cls.pmf(tab)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"bad kappa spec {text!r}: {exc}") from exc
        raise ValueError(f"bad kappa spec {text!r}")

    # queries -----------------------------------------------------------
    @property
    def support(self) -> tuple:
        """Finite support as ``((k, P(k)), ...)``; empty for geometric."""
        return self._support

    def prob(self, k: int) -> Fraction:
        if self.kind == "geometric":
            p, s = self.params
            return Fraction(0) if k < s else (1 - p) ** (k - s) * p
        return sum((v for j, v in self._support if j == k), Fraction(0))

    def label(self) -> str:
        if self.kind == "point-mass":
            return f"point:{self.params[0]}"
        if self.kind == "two-point":
            a, b, p = self.params
            return f"twopoint:{a}:{b}:{p}"
        if self.kind == "geometric":
            return f"geometric:{self.params[0]}:{self.params[1]}"
        return "pmf:" + ",".join(f"{k}={v}" for k, v in self._support)

    def kernel_args(self) -> tuple:
        """Arguments for the compiled samplers: ``(code, prob, alias, values, geo_p, geo_shift)``."""
        if self.kind == "geometric":
            p, s = self.params
            z = np.zeros(1)
            return (1, z, np.zeros(1, np.int64), np.zeros(1, np.int64), float(p), int(s))
        vals = np.array([k for k, _ in self._support], dtype=np.int64)
        prob, alias = alias_table([float(v) for _, v in self._support])
        return (0, prob, alias, vals, 0.0, 0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Vectorised draws (alias method for finite support)."""
        code, prob, alias, vals, gp, gs = self.kernel_args()
        if code == 1:
            if gp == 1.0:
                return np.full(size, gs, dtype=np.int64)
            return gs + rng.geometric(gp, size=size).astype(np.int64) - 1
        j = rng.integers(0, vals.size, size=size)
        keep = rng.random(size) < prob[j]
        return np.where(keep, vals[j], vals[alias[j]])
