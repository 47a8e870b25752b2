import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from harmonic_urn.exact import p_exact
from harmonic_urn.precision import PrecisionConfig, PrecisionError
from harmonic_urn.renewal import (char_roots, count_moments_mc, count_roots_in_strip,
                                  delay_residual, dominant_correction, mgf_log_margins,
                                  renewal_function_asymptotic, renewal_function_exact,
                                  root_seed, sample_renewal_count, sample_renewal_counts)
from harmonic_urn.stats import chi_square_gof
from harmonic_urn.streams import rng_stream


# --- sampling ---------------------------------------------------------------

def test_count_at_zero_is_one():
    g = rng_stream(0, "r", 0)
    assert all(sample_renewal_count(0.0, g) == 1 for _ in range(1000))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 60), st.integers(0, 2**31))
def test_count_at_least_t_plus_one(t, seed):
    n = sample_renewal_counts(t, 200, seed)
    assert np.all(n >= t + 1)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 60), st.integers(0, 2**31))
def test_count_exceeds_real_t(t, seed):
    # k uniforms sum to at most k, so S_k > t forces k > t
    n = sample_renewal_counts(t, 200, seed)
    assert np.all(n > t) and np.all(n >= math.floor(t) + 1)


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        sample_renewal_count(-1.0, rng_stream(0, "r", 0))
    with pytest.raises(ValueError):
        renewal_function_exact(-0.5)


def test_overshoot_law_is_transition_law():
    n = 5
    c = sample_renewal_counts(n, 1_000_000, 7) - n
    assert chi_square_gof(c, lambda m: float(p_exact(n, m)), support_min=1).p_value > 1e-3


# --- renewal function -------------------------------------------------------

def test_renewal_function_on_unit_interval():
    with mpmath.workprec(128):
        assert abs(renewal_function_exact(0.5) - mpmath.exp(0.5)) < 1e-25
        assert abs(renewal_function_exact(1) - mpmath.e) < 1e-25
        for t in np.linspace(0, 1, 11):
            assert abs(renewal_function_exact(t) - mpmath.exp(t)) < 1e-12


def test_renewal_function_at_ten():
    assert abs(renewal_function_exact(10) - (20 + mpmath.mpf(2) / 3)) < 1e-8


def test_renewal_function_between_one_and_two():
    # on [1, 2] the delay equation integrates to e^t - (t - 1) e^(t - 1)
    with mpmath.workprec(128):
        for t in (1.25, 1.5, 1.9):
            ref = mpmath.exp(t) - (t - 1) * mpmath.exp(t - 1)
            assert abs(renewal_function_exact(t) - ref) < 1e-25


def test_renewal_function_matches_sampled_mean():
    m = count_moments_mc(10.0, 200_000, 3)
    assert abs(m.mean - float(renewal_function_exact(10))) <= 3 * m.mean_se


@pytest.mark.parametrize("t", [1.5, 3.7, 12.2])
def test_delay_equation_residual(t):
    assert abs(delay_residual(t)) < 1e-4


def test_renewal_function_is_increasing():
    grid = np.linspace(0, 30, 121)
    vals = [renewal_function_exact(t) for t in grid]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_precision_escalation_cap():
    with pytest.raises(PrecisionError):
        renewal_function_exact(60, PrecisionConfig(bits=64, target_tol=1e-300, max_bits=128))


# --- characteristic roots ---------------------------------------------------

def test_first_root():
    g = char_roots(1)[0]
    assert abs(complex(g.value) - complex(-2.088843, 7.461489)) < 1e-5
    assert g.residual() < 1e-12


def test_second_root_near_its_seed():
    seed = root_seed(2)
    assert seed == pytest.approx(complex(-math.log(4 * math.pi), 4.5 * math.pi))
    g = char_roots(2)[1]
    assert abs(float(g.im) - 4.5 * math.pi) < 1


def test_roots_are_distinct_ordered_and_converged():
    roots = char_roots(40)
    assert all(r.residual() < 1e-12 and r.im > 0 for r in roots)
    assert all(b.im > a.im for a, b in zip(roots, roots[1:]))
    assert min(abs(a.value - b.value) for i, a in enumerate(roots) for b in roots[i + 1:]) > 1


@pytest.mark.parametrize("K", [1, 3, 8])
def test_root_count_in_strip(K):
    # the argument principle on the strip agrees with the Newton finder
    found = [r for r in char_roots(K + 2) if r.im < (2 * K + 0.5) * math.pi + 1]
    assert len(found) == K == count_roots_in_strip(K)


# --- pole expansion ---------------------------------------------------------

@pytest.mark.parametrize("t", [5, 10, 20, 30])
def test_pole_expansion_agrees_with_series(t):
    cfg = PrecisionConfig(bits=192)
    roots = char_roots(40, cfg)
    with mpmath.workprec(192):
        diff = renewal_function_asymptotic(t, 40, cfg, roots) - renewal_function_exact(t, cfg)
        assert abs(diff) < 1e-9


def test_dominant_correction_sign():
    with mpmath.workprec(128):
        dev = renewal_function_exact(5) - 10 - mpmath.mpf(2) / 3
        lead = dominant_correction(5)
        assert mpmath.sign(dev) == mpmath.sign(lead)
        assert abs(dev - lead) < abs(lead) / 10


def test_expansion_needs_positive_time():
    with pytest.raises(ValueError):
        renewal_function_asymptotic(0, 3)


# --- moments and mgf bounds -------------------------------------------------

def test_count_variance_and_second_moment():
    m = count_moments_mc(40.0, 1_000_000, 0)
    assert abs(m.variance - (2 / 3 * 40 + 2 / 9)) <= 3 * m.variance_se
    assert abs(m.second_moment - (4 * 1600 + 10 / 3 * 40 + 2 / 3)) <= 3 * m.second_moment_se


def test_mgf_quadratic_bounds():
    lo, hi = mgf_log_margins(np.linspace(0.01, 50, 400))
    assert np.all(lo >= -1e-15) and np.all(hi >= -1e-15)
