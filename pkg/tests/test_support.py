import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from harmonic_urn.exact import p_exact
from harmonic_urn.kappa import KappaSpec, alias_table
from harmonic_urn.precision import PrecisionConfig, PrecisionError, escalate
from harmonic_urn.stats import chi_square_gof, chi_square_table
from harmonic_urn.streams import as_generator, blocks, rng_stream, tag_id
from harmonic_urn.urn import simulate_noisy_many
from harmonic_urn.zchain import ZChain


# --- streams ----------------------------------------------------------------

def test_same_key_same_stream():
    a = rng_stream(42, "mod", 3).random(1000)
    b = rng_stream(42, "mod", 3).random(1000)
    assert np.array_equal(a, b)


def test_distinct_indices_are_uncorrelated():
    # one pair of independent 1e4-draw streams has corr SE 0.01, so the bound
    # applies to the average |rho| over all pairs (expected 0.008)
    draws = [rng_stream(7, "corr", i).random(10_000) for i in range(20)]
    c = np.corrcoef(draws)
    off = np.abs(c[np.triu_indices(20, 1)])
    assert off.mean() < 0.01
    assert off.max() < 4.5 / math.sqrt(10_000)


def test_tags_separate_streams():
    assert tag_id("a") != tag_id("b")
    a = rng_stream(1, "a", 0).random(5)
    b = rng_stream(1, "b", 0).random(5)
    assert not np.array_equal(a, b)


def test_blocks_ignore_total_count():
    small = [g.random(3) for g, _ in blocks(9, "t", 10, block_size=4)]
    large = [g.random(3) for g, _ in blocks(9, "t", 100, block_size=4)]
    for a, b in zip(small, large):
        assert np.array_equal(a, b)
    assert [c for _, c in blocks(9, "t", 10, block_size=4)] == [4, 4, 2]


def test_generator_passes_through():
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    assert [c for _, c in blocks(g, "t", 7)] == [7]


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        rng_stream(-1, "x", 0)


# --- chi-square helpers -----------------------------------------------------

def test_chi_square_accepts_the_true_law():
    g = np.random.default_rng(1)
    x = g.binomial(20, 0.3, 100_000)
    pmf = lambda k: math.comb(20, k) * 0.3 ** k * 0.7 ** (20 - k)
    assert chi_square_gof(x, pmf, support_min=0).p_value > 1e-3


def test_chi_square_rejects_a_wrong_law():
    g = np.random.default_rng(2)
    x = g.binomial(20, 0.32, 100_000)
    pmf = lambda k: math.comb(20, k) * 0.3 ** k * 0.7 ** (20 - k)
    assert chi_square_gof(x, pmf, support_min=0).p_value < 1e-6


def test_chi_square_mapping_and_merging():
    res = chi_square_gof(np.array([0] * 50 + [1] * 48 + [2] * 2), {0: 0.5, 1: 0.48, 2: 0.02})
    assert res.bins == 2 and res.samples == 100


def test_chi_square_table_rescales_missing_mass():
    res = chi_square_table(np.array([500, 300, 200]), np.array([0.5, 0.3, 0.2]))
    assert res.statistic == pytest.approx(0.0) and res.passes()


# --- kappa laws -------------------------------------------------------------

def test_kappa_means():
    assert KappaSpec.point(1).mean == 1
    assert KappaSpec.two_point(0, 2, Fraction(1, 2)).mean == 1
    assert KappaSpec.geometric(Fraction(1, 2)).mean == 1
    assert KappaSpec.pmf({0: Fraction(1, 3), 3: Fraction(2, 3)}).mean == 2


@pytest.mark.parametrize("text", ["point:1", "twopoint:0:2:3/4", "geometric:1/3:1",
                                  "pmf:0=1/2,2=1/2"])
def test_kappa_parse_roundtrip(text):
    k = KappaSpec.parse(text)
    assert KappaSpec.parse(k.label()) == k


@pytest.mark.parametrize("text", ["point", "twopoint:0:1", "geometric:2", "pmf:0=1/3", "flat:1"])
def test_kappa_parse_errors(text):
    with pytest.raises(ValueError):
        KappaSpec.parse(text)


@pytest.mark.parametrize("spec", [KappaSpec.two_point(0, 3, Fraction(1, 4)),
                                  KappaSpec.geometric(Fraction(2, 5), 1),
                                  KappaSpec.pmf({0: Fraction(1, 6), 1: Fraction(1, 2),
                                                 4: Fraction(1, 3)})], ids=lambda k: k.kind)
def test_kappa_sampling_law(spec):
    x = spec.sample(np.random.default_rng(3), 200_000)
    assert chi_square_gof(x, lambda k: float(spec.prob(k)), support_min=0).p_value > 1e-3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=12))
def test_alias_table_reproduces_weights(ws):
    p = np.array(ws) / sum(ws)
    prob, alias = alias_table(list(p))
    n = len(p)
    # exact cell masses of the alias method
    mass = prob / n
    for j in range(n):
        mass[alias[j]] += (1 - prob[j]) / n
    assert np.allclose(mass, p, atol=1e-12)


# --- precision --------------------------------------------------------------

def test_escalation_returns_agreeing_value():
    val, bits = escalate(lambda b: mpmath.exp(1), PrecisionConfig(bits=64, target_tol=1e-30))
    assert bits >= 128
    with mpmath.workprec(bits):
        assert abs(val - mpmath.e) < 1e-30


def test_escalation_cap():
    with pytest.raises(PrecisionError):
        escalate(lambda b: mpmath.mpf(b), PrecisionConfig(bits=64, max_bits=256))


def test_precision_config_validation():
    with pytest.raises(ValueError):
        PrecisionConfig(bits=32)
    with pytest.raises(ValueError):
        PrecisionConfig(target_tol=0)


# --- tabulated chain --------------------------------------------------------

@pytest.mark.parametrize("z", [1, 8, 40])
def test_table_sampler_law(z):
    x = ZChain().raw_steps(z, 300_000, z)
    assert chi_square_gof(x, lambda m: float(p_exact(z, m)), support_min=1).p_value > 1e-3


def test_beyond_table_moments():
    z = 5000
    x = ZChain(table_max=2000).raw_steps(z, 100_000, 1).astype(float)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - (z + 2 / 3)) <= 3 * se
    # Var = n + E[Z] - E[Z]^2 + n^2 -> (2/3) n + 2/9
    assert abs(x.var() / (2 / 3 * z + 2 / 9) - 1) < 0.02


def test_gaussian_steps_moments():
    z = 50_000
    x = ZChain(gauss_above=10_000).raw_steps(z, 100_000, 2).astype(float)
    assert abs(x.mean() - (z + 2 / 3)) <= 3 * x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.var() / (2 / 3 * z) - 1) < 0.02


def test_noisy_steps_apply_the_clamped_discard():
    kap = KappaSpec.point(2)
    x = ZChain(kap).steps(2, 200_000, 3)
    assert x.min() >= 1

    def pmf(m):
        return float(sum(p_exact(2, r) for r in range(1, 60) if r - min(2, r - 1) == m))
    assert chi_square_gof(x, pmf, support_min=1).p_value > 1e-3


def test_chain_and_urn_passage_times_agree():
    kap = KappaSpec.point(1)
    tq, _ = ZChain(kap).passage_times(3, 100_000, 4)
    ur = simulate_noisy_many(3, kap, 100_000, 5)["tau_q"]
    for cut in (1, 2, 5, 20):
        a, b = (tq <= cut).mean(), (ur <= cut).mean()
        se = math.sqrt(a * (1 - a) / tq.size + b * (1 - b) / ur.size)
        assert abs(a - b) <= 3 * se
