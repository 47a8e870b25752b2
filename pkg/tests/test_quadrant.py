import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from harmonic_urn.exact import p_exact
from harmonic_urn.quadrant import (NEAR_CRITICAL, RECURRENT, TRANSIENT, IncrementLaw,
                                   classify_quadrant, crossing_paths, delta_moments,
                                   delta_samples, exponential_transition_pmf,
                                   negative_binomial_pmf, simulate_crossings, sqrt_drift,
                                   transition_samples, verdict_from_moments)
from harmonic_urn.stats import chi_square_gof, chi_square_table

NAMES = ["uniform01", "exponential", "erlang2", "sqrt-uniform"]


# --- laws -------------------------------------------------------------------

def test_named_moments():
    assert IncrementLaw.named("uniform01").variance == Fraction(1, 12)
    assert IncrementLaw.named("erlang2").mean == 2
    law = IncrementLaw.named("sqrt-uniform")
    assert (law.mean, law.variance) == (Fraction(2, 3), Fraction(1, 18))
    assert law.gap == Fraction(7, 18)


@pytest.mark.parametrize("kind", NAMES)
def test_sampled_moments_match_named_moments(kind):
    law = IncrementLaw.named(kind)
    # one step from height 0 is a single draw of X
    x = delta_samples(law, 0.0, 400_000, 1)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - float(law.mean)) <= 3 * se
    v = (x - float(law.mean)) ** 2
    assert abs(v.mean() - float(law.variance)) <= 3 * v.std(ddof=1) / math.sqrt(v.size)


def test_law_validation():
    with pytest.raises(ValueError):
        IncrementLaw.named("cauchy")
    with pytest.raises(ValueError):
        IncrementLaw("uniform01", 0, 1)
    with pytest.raises(ValueError):
        IncrementLaw("custom", 1, 1)


# --- crossings --------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.sampled_from(NAMES), st.floats(0.01, 50), st.integers(0, 2**31))
def test_every_crossing_takes_a_step(kind, a0, seed):
    c = simulate_crossings(IncrementLaw.named(kind), a0, 20, seed)
    assert np.all(c.T >= 1) and np.all(c.R > 0)
    assert [r[0] for r in c.rows()] == list(range(1, 21))


def test_crossing_preconditions():
    law = IncrementLaw.named("uniform01")
    with pytest.raises(ValueError):
        simulate_crossings(law, 0.0, 3, 0)
    with pytest.raises(ValueError):
        crossing_paths(law, 2, 10, 0)
    with pytest.raises(ValueError):
        crossing_paths(law, 2, 10, 0, a0=1.0, irwin_hall=2)


def test_uniform_crossings_from_irwin_hall_start():
    T, _ = crossing_paths(IncrementLaw.named("uniform01"), 1, 1_000_000, 0, irwin_hall=5)
    assert chi_square_gof(T[:, 0], lambda m: float(p_exact(5, m)), support_min=1).p_value > 1e-3


def test_uniform_two_crossings_are_two_chain_steps():
    T, _ = crossing_paths(IncrementLaw.named("uniform01"), 2, 1_000_000, 1, irwin_hall=3)
    M = 30
    obs = np.zeros((M, M))
    inside = (T[:, 0] < M) & (T[:, 1] < M)
    np.add.at(obs, (T[inside, 0], T[inside, 1]), 1)
    probs = np.zeros((M, M))
    for a in range(1, M):
        for b in range(1, M):
            probs[a, b] = float(p_exact(3, a) * p_exact(a, b))
    cells = obs[1:, 1:].ravel()
    p = probs[1:, 1:].ravel()
    res = chi_square_table(np.append(cells, (~inside).sum()), np.append(p, 1 - p.sum()))
    assert res.p_value > 1e-3


def test_exponential_transition_is_negative_binomial():
    # given T_k = m, T_{k+1} - 1 has the law C(j + m - 1, m - 1) 2^-(m + j)
    s = transition_samples(IncrementLaw.named("exponential"), 5, 1_000_000, 0)
    res = chi_square_gof(s - 1, lambda j: float(negative_binomial_pmf(j, 4)), support_min=0)
    assert res.p_value > 1e-3


def test_transition_pmf_shift():
    assert exponential_transition_pmf(1, 1) == Fraction(1, 2)
    assert sum(exponential_transition_pmf(j, 4) for j in range(1, 200)) == pytest.approx(1.0)
    assert negative_binomial_pmf(-1, 3) == 0


def test_custom_sampler_matches_named_law():
    custom = IncrementLaw.custom(lambda g, n: g.random(n), Fraction(1, 2), Fraction(1, 12))
    d = delta_moments(custom, 50, 20_000, 2)
    assert abs(d.mean - 1 / 3) <= 3 * d.mean_se + 0.02
    c = simulate_crossings(custom, 3.0, 10, 3)
    assert np.all(c.T >= 1)
    s = transition_samples(custom, 4, 5000, 4)
    assert s.min() >= 1
    with pytest.raises(NotImplementedError):
        crossing_paths(custom, 2, 10, 0, a0=1.0)


# --- overshoot moments ------------------------------------------------------

@pytest.mark.parametrize("kind", NAMES)
def test_overshoot_mean(kind):
    law = IncrementLaw.named(kind)
    d = delta_moments(law, 200, 200_000, 5)
    assert abs(d.mean - law.delta_mean_limit) <= 3 * d.mean_se


def test_exponential_overshoot_second_moment():
    d = delta_moments(IncrementLaw.named("exponential"), 200, 200_000, 6)
    # exactly 2x + 2 for rate-1 exponential steps
    assert abs(d.second_moment - 402) <= 3 * d.second_moment_se


@pytest.mark.parametrize("kind", ["uniform01", "exponential"])
def test_second_moment_grows_linearly(kind):
    law = IncrementLaw.named(kind)
    ms = [delta_moments(law, x, 200_000, 7 + i) for i, x in enumerate((100, 200, 400))]
    for a, b in zip(ms, ms[1:]):
        slope = (b.second_moment - a.second_moment) / (b.x - a.x)
        se = math.hypot(a.second_moment_se, b.second_moment_se) / (b.x - a.x)
        assert abs(slope - law.delta_second_slope) <= 3 * se


# --- classification ---------------------------------------------------------

def test_verdict_from_moments():
    assert verdict_from_moments(1, 1) == (RECURRENT, True)
    assert verdict_from_moments(Fraction(2), Fraction(2)) == (TRANSIENT, False)
    assert verdict_from_moments(Fraction(1), Fraction(101, 100)) == (NEAR_CRITICAL, True)
    assert verdict_from_moments(Fraction(1), Fraction(3)) == (RECURRENT, False)


@pytest.mark.parametrize("kind,expected", [("uniform01", TRANSIENT), ("exponential", RECURRENT),
                                           ("erlang2", TRANSIENT), ("sqrt-uniform", TRANSIENT)])
def test_verdicts_from_moments_for_named_laws(kind, expected):
    law = IncrementLaw.named(kind)
    assert verdict_from_moments(law.mean, law.variance)[0] == expected


@pytest.mark.parametrize("kind", NAMES)
def test_drift_statistic_sign(kind):
    v = classify_quadrant(IncrementLaw.named(kind), budget=200_000, rng=0)
    if v.verdict == TRANSIENT:
        assert v.sign_agrees is True
    else:
        # exactly critical: the limit is 0 and the band must contain it
        assert v.sign_agrees is None
        assert abs(v.top.statistic) <= 3 * v.top.se
    assert v.to_dict()["verdict"] == v.verdict


def test_drift_statistic_limit_for_uniform():
    p = sqrt_drift(IncrementLaw.named("uniform01"), 20.0, 200_000, 9)
    assert abs(p.statistic - 1 / 6) <= 3 * p.se + 0.05
