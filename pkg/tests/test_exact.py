import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from harmonic_urn.exact import (eulerian, eulerian_alternating, identity_report, mean_exact,
                                mean_recip, p_alternating, p_exact, recip_identities, second_moment_exact,
                                second_moment_residual, survival_exact, tail_bound,
                                transition_row, truncation_point)
from harmonic_urn.renewal import sample_renewal_counts
from harmonic_urn.stats import chi_square_gof
from harmonic_urn.urn import traverse_many


def _descent_count(n, k):
    # permutations of 1..n with exactly k - 1 descents
    return sum(1 for p in itertools.permutations(range(n))
               if sum(p[i] > p[i + 1] for i in range(n - 1)) == k - 1)


# --- Eulerian numbers -------------------------------------------------------

def test_eulerian_examples():
    assert eulerian(1, 1) == 1
    assert eulerian(3, 2) == 4
    assert eulerian(4, 2) == 11


@pytest.mark.parametrize("n", range(1, 8))
def test_eulerian_matches_permutation_count(n):
    for k in range(1, n + 1):
        assert eulerian(n, k) == _descent_count(n, k)


def test_eulerian_rows_sum_to_factorial():
    for n in range(1, 30):
        assert sum(eulerian(n, k) for k in range(1, n + 1)) == math.factorial(n)


def test_eulerian_domain():
    for n, k in [(0, 1), (3, 0), (3, 4), (-1, 1)]:
        with pytest.raises(ValueError):
            eulerian(n, k)


# --- transition law ---------------------------------------------------------

def test_transition_examples():
    assert p_exact(1, 1) == Fraction(1, 2)
    assert p_exact(1, 2) == Fraction(1, 3)
    assert p_exact(2, 1) == Fraction(1, 6)


def test_row_one_closed_form():
    for m in range(1, 30):
        assert p_exact(1, m) == Fraction(m, math.factorial(m + 1))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40))
def test_alternating_form_agrees(n, m):
    assert p_exact(n, m, check=False) == p_alternating(n, m)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.integers(1, 60))
def test_detailed_balance(n, m):
    assert n * p_exact(n, m) == m * p_exact(m, n)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(2, 40))
def test_recurrence(n, m):
    lhs = Fraction(n + m, m) * p_exact(n, m)
    assert lhs == p_exact(n - 1, m) + Fraction(n, m - 1) * p_exact(n, m - 1)


def test_median_is_exactly_half():
    for n in range(1, 41):
        assert sum(p_exact(n, m) for m in range(1, n + 1)) == Fraction(1, 2)


def test_survival_examples():
    assert survival_exact(1, 0) == 1
    assert survival_exact(1, 1) == Fraction(1, 2)
    for n in range(1, 41):
        assert survival_exact(n, n) == Fraction(1, 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.integers(1, 40))
def test_survival_differences_give_pmf(n, m):
    assert survival_exact(n, m - 1) - survival_exact(n, m) == p_exact(n, m)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        p_exact(0, 1)
    with pytest.raises(ValueError):
        p_exact(1, 0)
    with pytest.raises(ValueError):
        survival_exact(1, -1)


# --- rows and tail certificates --------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 5, 10, 20, 40])
def test_row_brackets_one(n):
    row = transition_row(n, 1e-12)
    assert row.brackets_one()
    assert row.tail_bound < 1e-12
    assert float(1 - row.partial_sum()) < 1e-12
    assert all(0 < p < 1 for p in row.probs.values())


def test_tail_bound_dominates_true_tail():
    for n in (1, 3, 8, 15):
        for M in range(n + 1, 4 * n + 20, 3):
            true_tail = 1 - sum(p_exact(n, m) for m in range(1, M + 1))
            assert float(true_tail) <= tail_bound(n, M)


def test_truncation_point_is_least():
    M = truncation_point(10, 1e-12)
    assert tail_bound(10, M) < 1e-12 <= tail_bound(10, M - 1)


def test_r_accessor():
    row = transition_row(3, 1e-8)
    assert row.r(2) == Fraction(5, 2) * p_exact(3, 2)


# --- moments ----------------------------------------------------------------

def test_mean_from_one_is_e_minus_one():
    with mpmath.workprec(200):
        m = mean_exact(1, 1e-30)
        assert abs(m.value - (mpmath.e - 1)) < 1e-29


@pytest.mark.parametrize("n", range(1, 16))
def test_drift_is_two_thirds_up_to_exponential_error(n):
    with mpmath.workprec(200):
        m = mean_exact(n, 1e-25)
        err = abs(m.value - n - mpmath.mpf(2) / 3)
        assert err <= 2 * mpmath.exp(-2.0888 * n)


@pytest.mark.parametrize("n", range(1, 21))
def test_second_moment_identity(n):
    assert second_moment_residual(n) < 1e-12
    second_moment_exact(n)


def test_reciprocal_moment_from_one():
    with mpmath.workprec(200):
        assert abs(mean_recip(1, 1e-30).value - (mpmath.e - 2)) < 1e-29


@pytest.mark.parametrize("n", [2, 3, 7, 15])
def test_reciprocal_identities(n):
    r = recip_identities(n)
    assert r["ok"]
    assert r["identity_recip_residual"] < 1e-10
    assert r["formula_residual"] < 1e-12


def test_reciprocal_mean_approaches_one_over_n():
    assert abs(recip_identities(15)["E_recip"] - 1 / 15) < 1e-3


def test_transience_margin_is_positive():
    for n in range(2, 31):
        r = recip_identities(n)
        assert r["transience_margin"] > r["transience_margin_error"]


def test_identity_report_residuals_vanish():
    rep = identity_report(max_n=20, rec_max=15)
    assert rep and all(r["max_residual"] == 0 for r in rep if r["identity_name"] != "row_tail")


# --- agreement with simulation ---------------------------------------------

def test_renewal_counts_reproduce_transition_law():
    n, size = 6, 400_000
    c = sample_renewal_counts(n, size, 21) - n
    for m in range(1, 12):
        p = float(p_exact(n, m))
        assert abs((c == m).mean() - p) <= 3 * math.sqrt(p * (1 - p) / size)


@pytest.mark.parametrize("n", [1, 3, 10])
def test_traversal_endpoints_match_exact_law(n):
    z = traverse_many(n, 1_000_000, 100 + n)["z_next"]
    res = chi_square_gof(z, lambda m: float(p_exact(n, m)), support_min=1)
    assert res.p_value > 1e-3


def test_empirical_mean_matches_exact_mean():
    z = traverse_many(7, 200_000, 8)["z_next"].astype(float)
    assert abs(z.mean() - float(mean_exact(7))) <= 3 * z.std(ddof=1) / np.sqrt(z.size)


def test_eulerian_alternating_form():
    for n in range(1, 25):
        for k in range(1, n + 1):
            assert eulerian_alternating(n, k) == eulerian(n, k)
