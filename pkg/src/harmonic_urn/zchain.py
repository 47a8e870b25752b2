"""Fast sampler for the embedded chain at the level of axis hits.

The transition law ``p(n, .)`` is tabulated in double precision from the
positive recurrence

    p(n, m) = m / (n + m) * (p(n-1, m) + n / (m - 1) * p(n, m-1)),

which only adds non-negative terms and so loses no accuracy, and sampled by
inversion.  Above the table the law is drawn exactly from the renewal
representation ``N(n) - n``, or, past an optional switch level, from the
moment-matched normal approximation ``n + 2/3 + sqrt(2n/3 + 2/9) xi``.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .kappa import KappaSpec
from .renewal import renewal_count
from .streams import RngLike, blocks

#: mass left outside each stored window
WINDOW_MASS = 1e-16

_TABLES: dict[int, tuple] = {}


@njit(cache=True)
def _build(nmax, mmax, eps, offs, los, lens, flat_cap):
    row = np.zeros(mmax + 2)
    new = np.zeros(mmax + 2)
    flat = np.empty(flat_cap)
    pos = 0
    # n = 1: p(1, m) = m / (m + 1)!
    v = 0.5
    row[1] = v
    for m in range(2, mmax + 1):
        v = v * m / ((m - 1) * (m + 1.0))
        row[m] = v
    for n in range(1, nmax + 1):
        if n > 1:
            new[0] = 0.0
            new[1] = row[1] / (n + 1.0)
            for m in range(2, mmax + 1):
                new[m] = m / (n + m + 0.0) * (row[m] + n / (m - 1.0) * new[m - 1])
            for m in range(mmax + 1):
                row[m] = new[m]
        # window [lo, hi] holding all but ``eps`` of the mass
        c = 0.0
        lo = 1
        while c + row[lo] < eps:
            c += row[lo]
            lo += 1
        tail = 0.0
        hi = mmax
        while tail + row[hi] < eps:
            tail += row[hi]
            hi -= 1
        offs[n] = pos
        los[n] = lo
        lens[n] = hi - lo + 1
        acc = c
        for m in range(lo, hi + 1):
            acc += row[m]
            flat[pos] = acc
            pos += 1
        # renormalise away the rounding of the running sum
        tot = acc + tail
        for j in range(offs[n], pos):
            flat[j] /= tot
    return flat[:pos]


def _tables(nmax: int):
    if nmax not in _TABLES:
        mmax = int(nmax + 12 * math.sqrt(nmax) + 60)
        offs = np.zeros(nmax + 1, np.int64)
        los = np.zeros(nmax + 1, np.int64)
        lens = np.zeros(nmax + 1, np.int64)
        cap = int(20 * nmax ** 1.5 + 100 * nmax + 1000)
        flat = _build(nmax, mmax, WINDOW_MASS, offs, los, lens, cap)
        _TABLES[nmax] = (offs, los, lens, flat.copy())
    return _TABLES[nmax]


_A = np.array([-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
               1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00])
_B = np.array([-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
               6.680131188771972e+01, -1.328068155288572e+01])
_C = np.array([-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
               -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00])
_D = np.array([7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
               3.754408661907416e+00])


@njit(cache=True, inline="always")
def _norm_ppf(u):
    # rational approximation to the normal quantile (relative error ~1e-9);
    # only used as a starting guess for the exact table search
    if u < 0.02425:
        q = math.sqrt(-2.0 * math.log(max(u, 1e-300)))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if u > 1.0 - 0.02425:
        q = math.sqrt(-2.0 * math.log(max(1.0 - u, 1e-300)))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = u - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


MODE_RAW, MODE_NOISY, MODE_AT_TIME, MODE_RETURNS, MODE_PASSAGE = 0, 1, 2, 3, 4


@njit(cache=True)
def _chain_run(mode, z0, param, cap, count, rng, offs, los, lens, flat, ga,
               code, prob, alias, vals, gp, gs, out1, out2):
    """All chain experiments share this loop so the step is compiled once, in place.

    Modes: raw step, noisy step, ``Z~_param``, return-before-escape with
    escape level ``param``, and passage times ``(tau_q, tau)``.
    """
    nmax = offs.size - 1
    nvals = vals.size
    for i in range(count):
        z = z0
        nu = np.int64(-1)
        tq = np.int64(-1)
        tt = np.int64(-1)
        res = np.int64(-1)
        nsteps = 1 if mode <= MODE_NOISY else (param if mode == MODE_AT_TIME else cap)
        for k in range(1, nsteps + 1):
            # raw axis distance given z
            if z <= nmax:
                u = rng.random()
                a = offs[z]
                last = lens[z] - 1
                # start near the normal quantile, then walk to the exact inverse
                guess = z + 2.0 / 3.0 + math.sqrt(2.0 * z / 3.0 + 2.0 / 9.0) * _norm_ppf(u)
                j = np.int64(guess + 0.5) - los[z]
                if j < 0:
                    j = 0
                elif j > last:
                    j = last
                if flat[a + j] > u:
                    while j > 0 and flat[a + j - 1] > u:
                        j -= 1
                else:
                    while j < last and flat[a + j] <= u:
                        j += 1
                zr = los[z] + j
            elif ga > 0 and z >= ga:
                m = z + 2.0 / 3.0 + math.sqrt(2.0 * z / 3.0 + 2.0 / 9.0) * rng.standard_normal()
                zr = max(np.int64(np.floor(m + 0.5)), np.int64(1))
            else:
                zr = renewal_count(float(z), rng) - z
            if mode == MODE_RAW:
                out1[i] = zr
                break
            # discard
            if code == 1:
                if gp >= 1.0:
                    kap = gs
                else:
                    kap = gs + np.int64(np.floor(np.log(1.0 - rng.random()) / np.log1p(-gp)))
            else:
                jj = np.int64(rng.random() * nvals)
                if jj >= nvals:
                    jj = nvals - 1
                kap = vals[jj] if rng.random() < prob[jj] else vals[alias[jj]]
            zn = zr - min(kap, zr - 1)
            if mode == MODE_NOISY:
                out1[i] = zn
                break
            if mode == MODE_RETURNS:
                if zn == 1:
                    res = 1
                    break
                if zn > param:
                    res = 0
                    break
            elif mode == MODE_PASSAGE:
                # the k-th axis hit happens z + zr steps after the previous one
                nu += z + zr
                if zr == 1 and tt < 0:
                    tt = nu
                if zn == 1 and tq < 0:
                    tq = k
                if tq >= 0 and tt >= 0:
                    break
            z = zn
        if mode == MODE_AT_TIME:
            out1[i] = z
        elif mode == MODE_RETURNS:
            out1[i] = res
        elif mode == MODE_PASSAGE:
            out1[i] = tq
            out2[i] = tt


class ZChain:
    """Sampler for ``Z~_k`` under a law of kappa.

    Parameters
    ----------
    kappa : KappaSpec
        Discard law (``point:0`` gives the simple urn's chain).
    table_max : int
        Largest state with a tabulated inverse CDF.
    gauss_above : int or None
        States at or above this level (and above the table) use the normal
        approximation; ``None`` keeps the exact renewal draw everywhere.
    """

    def __init__(self, kappa: KappaSpec | None = None, table_max: int = 2000,
                 gauss_above: int | None = None):
        self.kappa = kappa or KappaSpec.point(0)
        self.table_max = int(table_max)
        self.gauss_above = int(gauss_above or 0)
        self._tab = _tables(self.table_max)

    def _run(self, mode, z0, param, cap, size, rng, tag, two=False):
        out1 = np.empty(size, np.int64)
        out2 = np.empty(size if two else 1, np.int64)
        kargs = self.kappa.kernel_args()
        pos = 0
        for g, c in blocks(rng, tag, size):
            _chain_run(np.int64(mode), np.int64(z0), np.int64(param), np.int64(cap), c, g,
                       *self._tab, np.int64(self.gauss_above), *kargs,
                       out1[pos:pos + c], out2[pos:pos + c] if two else out2)
            pos += c
        return (out1, out2) if two else out1

    def raw_steps(self, z: int, size: int, rng: RngLike, tag: str = "zchain") -> np.ndarray:
        """``size`` draws of ``Z_{k+1}`` given ``Z_k = z`` (no discard)."""
        return self._run(MODE_RAW, z, 0, 1, size, rng, tag)

    def steps(self, z: int, size: int, rng: RngLike, tag: str = "zchain") -> np.ndarray:
        """``size`` draws of ``Z~_{k+1}`` given ``Z~_k = z``."""
        return self._run(MODE_NOISY, z, 0, 1, size, rng, tag)

    def at_time(self, z0: int, k: int, size: int, rng: RngLike, tag: str = "zchain-k") -> np.ndarray:
        """``Z~_k`` for ``size`` independent chains started from ``z0``."""
        return self._run(MODE_AT_TIME, z0, k, k, size, rng, tag)

    def returns(self, z0: int, escape: int, size: int, rng: RngLike,
                max_steps: int = 10**8, tag: str = "zchain-return") -> np.ndarray:
        """1 if ``Z~`` reaches 1 before exceeding ``escape``, 0 on escape, -1 if capped."""
        return self._run(MODE_RETURNS, z0, escape, max_steps, size, rng, tag)

    def passage_times(self, z0: int, size: int, rng: RngLike, max_steps: int = 10**7,
                      tag: str = "zchain-tau") -> tuple[np.ndarray, np.ndarray]:
        """``(tau_q, tau)`` per path, -1 where censored.

        ``tau`` is the urn step at which the walk first enters ``C``, i.e. the
        step of the first axis hit at distance 1 (valid for ``kappa >= 0``).
        """
        return self._run(MODE_PASSAGE, z0, 0, max_steps, size, rng, tag, two=True)
