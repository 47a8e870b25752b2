"""Goodness-of-fit helpers shared by the simulators' checks."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class ChiSquare:
    """Pearson chi-square result over merged bins."""

    statistic: float
    dof: int
    p_value: float
    bins: int
    samples: int

    def passes(self, alpha: float = 1e-3) -> bool:
        return self.p_value > alpha


def _merge(obs: np.ndarray, exp: np.ndarray, min_expected: float):
    # sweep left to right, closing a bin once it holds enough expected mass;
    # the leftover right tail is folded into the last closed bin
    mo, me = [], []
    co = ce = 0.0
    for o, e in zip(obs, exp):
        co += o
        ce += e
        if ce >= min_expected:
            mo.append(co)
            me.append(ce)
            co = ce = 0.0
    if ce > 0 or co > 0:
        if me:
            mo[-1] += co
            me[-1] += ce
        else:
            mo.append(co)
            me.append(ce)
    return np.array(mo), np.array(me)


def chi_square_gof(samples, pmf: Callable[[int], float] | Mapping[int, float],
                   support_min: int | None = None, min_expected: float = 5.0) -> ChiSquare:
    """Chi-square test of integer samples against a pmf.

    Cells run from ``support_min`` (default: the smallest sample) to the
    largest sample; the mass of the pmf beyond the largest sample goes into
    the last cell, so the expected counts always total the sample size.
    Adjacent cells are merged until each expects ``min_expected`` counts.

    Parameters
    ----------
    samples : array_like of int
    pmf : callable or mapping
        Probability of each integer value.
    support_min : int, optional
        Smallest value with positive probability.
    min_expected : float
        Merge threshold.
    """
    x = np.asarray(samples, dtype=np.int64)
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    lo = int(x.min()) if support_min is None else int(support_min)
    if x.min() < lo:
        raise ValueError("sample below the stated support")
    hi = int(x.max())
    get = pmf.get if isinstance(pmf, Mapping) else pmf
    probs = np.array([float(get(v) or 0.0) for v in range(lo, hi + 1)])
    probs[-1] += max(0.0, 1.0 - probs.sum())
    obs = np.bincount(x - lo, minlength=hi - lo + 1).astype(float)
    mo, me = _merge(obs, probs * n, min_expected)
    me *= n / me.sum()
    stat = float(((mo - me) ** 2 / me).sum())
    dof = max(len(me) - 1, 1)
    return ChiSquare(stat, dof, float(stats.chi2.sf(stat, dof)), len(me), n)


def chi_square_table(observed: np.ndarray, expected_probs: np.ndarray,
                     min_expected: float = 5.0) -> ChiSquare:
    """Chi-square of flattened cell counts against cell probabilities.

    Cells are merged in order of decreasing expected count so sparse cells
    pool together.
    """
    obs = np.asarray(observed, dtype=float).ravel()
    p = np.asarray(expected_probs, dtype=float).ravel()
    n = obs.sum()
    order = np.argsort(-p, kind="stable")
    mo, me = _merge(obs[order], p[order] * n, min_expected)
    # mass outside the listed cells is unobservable in ``observed``; rescale
    me *= n / me.sum()
    stat = float(((mo - me) ** 2 / me).sum())
    dof = max(len(me) - 1, 1)
    return ChiSquare(stat, dof, float(stats.chi2.sf(stat, dof)), len(me), int(n))
