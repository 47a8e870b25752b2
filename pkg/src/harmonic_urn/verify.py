"""Acceptance checks, one function per criterion.

Each check records the claim it tests (``anchor``), the expected value, the
observed value, the tolerance and a pass flag.  Monte Carlo checks draw from
streams derived from a single master seed.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath
import numpy as np

from . import asymptotics, embeddings, exact, percolation, quadrant, renewal, urn
from .kappa import KappaSpec
from .precision import PrecisionConfig
from .stats import chi_square_gof


@dataclass
class Check:
    check_id: str
    anchor: str
    expected: object
    observed: object
    tolerance: object
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("expected", "observed", "tolerance"):
            d[k] = _plain(d[k])
        return d


def _plain(v):
    if isinstance(v, (np.floating, mpmath.mpf)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check]
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def line(self) -> str:
        failed = [c.check_id for c in self.checks if not c.passed]
        tail = "" if not failed else "  failing: " + ", ".join(failed)
        return (f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] "
                f"{self.title} ({self.seconds:.1f} s){tail}")


@dataclass
class VerifyReport:
    seed: int
    criteria: list[CriterionResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def to_dict(self) -> dict:
        return {
            "schema": 1, "seed": self.seed, "pass": self.passed,
            "criteria": [{"number": c.number, "title": c.title, "pass": c.passed,
                          "seconds": round(c.seconds, 3),
                          "checks": [k.to_dict() for k in c.checks]} for c in self.criteria],
        }


# --------------------------------------------------------------------------
# criteria

def criterion_1(seed: int) -> list[Check]:
    rep = {r["identity_name"]: r["max_residual"] for r in exact.identity_report(40, 40)}
    out = [
        Check("detailed_balance", "n p(n,m) = m p(m,n)", 0, rep["detailed_balance"], 0,
              rep["detailed_balance"] == 0),
        Check("recurrence", "(n+m)/m p(n,m) = p(n-1,m) + n/(m-1) p(n,m-1)", 0,
              rep["recurrence"], 0, rep["recurrence"] == 0),
        Check("median_half", "sum_{m<=n} p(n,m) = 1/2", 0, rep["median_half"], 0,
              rep["median_half"] == 0),
    ]
    worst = 0.0
    ok = True
    for n in range(1, 41):
        row = exact.transition_row(n, 1e-12)
        worst = max(worst, row.tail_bound)
        ok &= row.brackets_one() and row.tail_bound < 1e-12
    out.append(Check("row_tails", "certified row tail below 1e-12 and brackets 1", "< 1e-12",
                     worst, 1e-12, ok))
    return out


def criterion_2(seed: int) -> list[Check]:
    worst = max(exact.second_moment_residual(n) for n in range(1, 21))
    return [Check("second_moment", "E[Z^2] = n^2 + n + E[Z]", 0, worst, 1e-12, worst < 1e-12)]


def criterion_3(seed: int) -> list[Check]:
    cfg = PrecisionConfig(bits=128, target_tol=1e-30)
    worst_ratio = 0.0
    worst_route = 0.0
    with mpmath.workprec(cfg.bits):
        for n in range(1, 16):
            m = exact.mean_exact(n, 1e-25)
            # independent route: E[Z_1 | Z_0 = n] = f(n) - n
            f = renewal.renewal_function_exact(n, cfg) - n
            worst_route = max(worst_route, float(abs(m.value - f)) - m.tail)
            worst_ratio = max(worst_ratio, abs(float(f - n - mpmath.mpf(2) / 3))
                              / (2 * math.exp(-2.0888 * n)))
    return [
        Check("drift_bound", "|E_n[Z] - n - 2/3| <= 2 exp(-2.0888 n)", "<= 1", worst_ratio, 1.0,
              worst_ratio <= 1.0),
        Check("two_routes", "series mean equals renewal function f(n) - n", 0, worst_route,
              1e-20, worst_route < 1e-20),
    ]


def criterion_4(seed: int) -> list[Check]:
    r = renewal.char_roots(1)[0]
    err = abs(complex(float(r.re), float(r.im)) - complex(-2.088843, 7.461489))
    res = r.residual()
    return [
        Check("gamma1", "first root of l - 1 + exp(-l)", "-2.088843+7.461489i",
              [float(r.re), float(r.im)], 1e-5, err < 1e-5),
        Check("gamma1_residual", "|g - 1 + exp(-g)|", 0, res, 1e-12, res < 1e-12),
    ]


def criterion_5(seed: int) -> list[Check]:
    cfg = PrecisionConfig(bits=256, target_tol=1e-40)
    roots = renewal.char_roots(40, cfg)
    worst = 0.0
    for t in (5, 10, 20, 30):
        with mpmath.workprec(cfg.bits):
            a = renewal.renewal_function_exact(t, cfg)
            b = renewal.renewal_function_asymptotic(t, 40, cfg, roots)
            worst = max(worst, float(abs(a - b)))
    worst_exp = 0.0
    for t in np.linspace(0, 1, 21):
        t = mpmath.mpf(float(t))
        with mpmath.workprec(cfg.bits):
            worst_exp = max(worst_exp, float(abs(renewal.renewal_function_exact(t, cfg)
                                                 - mpmath.exp(t))))
    return [
        Check("pole_expansion", "exact series vs 40 pole pairs at t = 5, 10, 20, 30", 0, worst,
              1e-9, worst < 1e-9),
        Check("unit_interval", "f(t) = e^t on [0, 1]", 0, worst_exp, 1e-12, worst_exp < 1e-12),
    ]


def criterion_6(seed: int) -> list[Check]:
    t = 40.0
    m = renewal.count_moments_mc(t, 10**6, seed)
    var_t = 2 / 3 * t + 2 / 9
    sq_t = 4 * t * t + 10 / 3 * t + 2 / 3
    return [
        Check("variance", "Var N(t) = 2t/3 + 2/9", var_t, m.variance, 3 * m.variance_se,
              abs(m.variance - var_t) <= 3 * m.variance_se),
        Check("second_moment", "E N(t)^2 = 4t^2 + 10t/3 + 2/3", sq_t, m.second_moment,
              3 * m.second_moment_se, abs(m.second_moment - sq_t) <= 3 * m.second_moment_se),
    ]


def _gof_check(cid, anchor, samples, n):
    r = chi_square_gof(samples, lambda m: float(exact.p_exact(n, m, check=False)), support_min=1)
    return Check(cid, anchor, "> 1e-3", r.p_value, 1e-3, r.p_value > 1e-3)


def criterion_7(seed: int) -> list[Check]:
    out = []
    for n in (1, 3, 10):
        z = urn.traverse_many(n, 10**6, seed, tag=f"accept-traverse-{n}")["z_next"]
        out.append(_gof_check(f"traverse_n{n}", "urn traversal endpoint ~ p(n, .)", z, n))
    z = embeddings.slow_final_many(5, 10**6, seed)
    out.append(_gof_check("slow_z5", "death/birth embedding final V ~ p(5, .)", z, 5))
    return out


def criterion_8(seed: int) -> list[Check]:
    e1 = embeddings.tau_f_mc(1, 10**5, seed)["tau"]
    r = embeddings.tau_f_mc(200, 2 * 10**4, seed)
    mr = embeddings.martingale_residual(50, 0, math.pi / 2, 10**5, seed)
    return [
        Check("tau_1", "E_1[tau_f] = e - 1", math.e - 1, e1.mean, 3 * e1.se, e1.within(math.e - 1)),
        Check("tau_200", "E_n[tau_f] -> pi/2", math.pi / 2, r["tau"].mean, 3 * r["tau"].se + 0.02,
              r["tau"].within(math.pi / 2, slack=0.02)),
        Check("sq_dev_200", "E_n[(tau_f - pi/2)^2] -> 0", "< 0.1", r["sq_dev"].mean, 0.1,
              r["sq_dev"].mean < 0.1),
        Check("complex_martingale", "E[A(t) + iB(t)] = (a + ib) e^{it}", [0.0, 0.0],
              [mr.re, mr.im], [3 * mr.re_se, 3 * mr.im_se], mr.within()),
    ]


def criterion_9(seed: int) -> list[Check]:
    cfg = PrecisionConfig()
    d1 = float(abs(embeddings.tau_f_poly_exact(1, cfg) - (mpmath.e - 1)))
    res = max(embeddings.area_identity_residuals(20, cfg))
    ratio = float(embeddings.area_poly_exact(30, cfg) / (mpmath.pi * 900 / 4))
    return [
        Check("tau_poly_1", "traversal-time polynomial at n = 1 equals e - 1", 0, d1, 1e-12,
              d1 < 1e-12),
        Check("area_identity", "area(n) = sum_m m E_m[tau_f]", 0, res, 1e-10, res < 1e-10),
        Check("area_30", "area(n) ~ pi n^2 / 4", "[0.9, 1.1]", ratio, 0.1, 0.9 <= ratio <= 1.1),
    ]


#: coalescence budget: six full turns, counted in quadrant crossings
COALESCE_BUDGET = 24


def criterion_10(seed: int) -> list[Check]:
    phi = (percolation.phi_map(3.5, 0.5), percolation.phi_map(3.5, -0.5))
    out = [Check("phi_examples", "(3.5, 0.5) -> (4, 0) and (3.5, -0.5) -> (3, 1)",
                 [[4, 0], [3, 1]], [list(p) for p in phi], 0, phi == ((4, 0), (3, 1)))]
    T = percolation.solve_T(5)
    for m in range(1, 6):
        s = percolation.in_graph_many(0, m, 10**5, seed).astype(float)
        mean, se = s.mean(), s.std(ddof=1) / math.sqrt(s.size)
        target = m * T(m, 0)
        out.append(Check(f"in_graph_m{m}", "E[I(0,m)] = m T(m,0)", target, mean, 3 * se,
                         abs(mean - target) <= 3 * se))
    trials = percolation.coalescence_trials(5, 9, 100, seed, winding_budget=COALESCE_BUDGET)
    frac = sum(not c.exhausted for c in trials) / len(trials)
    out.append(Check("coalescence", "paths from (5,0) and (9,0) coalesce", ">= 0.9", frac, 0.9,
                     frac >= 0.9))
    return out


def criterion_11(seed: int) -> list[Check]:
    out = []
    for k, cmp in ((0, "le"), (1, "ge")):
        kap = KappaSpec.point(k)
        rep = asymptotics.classify(kap, rng=seed)
        e = float(kap.mean)
        if cmp == "le":
            out.append(Check("return_k0", "kappa = 0 is transient: return fraction <= 0.9", "<= 0.9",
                             rep.return_fraction, 0.9, rep.return_fraction <= 0.9))
        else:
            out.append(Check("return_k1", "kappa = 1 is positive recurrent: return fraction >= 0.99",
                             ">= 0.99", rep.return_fraction, 0.99, rep.return_fraction >= 0.99))
        for name, val, se, tgt in (("minus", rep.drift_minus, rep.drift_minus_se, 1 / 3 - e),
                                   ("plus", rep.drift_plus, rep.drift_plus_se, 2 / 3 - e)):
            out.append(Check(f"drift_{name}_k{k}", f"2x mu1 {'-' if name == 'minus' else '+'} mu2"
                             f" -> {'1/3' if name == 'minus' else '2/3'} - E[kappa]", tgt, val,
                             3 * se, abs(val - tgt) <= 3 * se))
    return out


def criterion_12(seed: int) -> list[Check]:
    fits = asymptotics.tail_exponent_tau_q(KappaSpec.point(1), 10**6, seed)
    a, b = fits["tau_q"], fits["tau"]
    return [
        Check("tau_q_exponent", "P(tau_q > t) ~ t^-(3E[kappa] - 1)", "[1.7, 2.3]", a.exponent,
              list(a.ci), 1.7 <= a.exponent <= 2.3),
        Check("tau_exponent", "P(tau > t) ~ t^-(3E[kappa] - 1)/2", "[0.7, 1.3]", b.exponent,
              list(b.ci), 0.7 <= b.exponent <= 1.3),
    ]


def criterion_13(seed: int) -> list[Check]:
    r = asymptotics.diffusion_marginal_test(KappaSpec.point(0), 2000, 10**4, seed)
    return [
        Check("ks", "Z_k / k -> Gamma(2, rate 3)", "< 0.05", r.ks_statistic, 0.05,
              r.ks_statistic < 0.05),
        Check("mean", "E[Z_k / k] -> 2/3", 2 / 3, r.mean, 3 * r.mean_se,
              abs(r.mean - 2 / 3) <= 3 * r.mean_se),
    ]


#: verdicts stated for the named step laws
STATED_VERDICTS = {"exponential": quadrant.RECURRENT, "erlang2": quadrant.TRANSIENT,
                   "sqrt-uniform": quadrant.RECURRENT}


def criterion_14(seed: int) -> list[Check]:
    exp_law = quadrant.IncrementLaw.named("exponential")
    # crossing lengths are at least 1: the negative-binomial law with m + 1
    # successes describes T - 1 given T - 1 = m
    m = 4
    s = quadrant.transition_samples(exp_law, m + 1, 10**6, seed) - 1
    r = chi_square_gof(s, lambda j: float(quadrant.negative_binomial_pmf(j, m)), support_min=0)
    out = [Check("negative_binomial", "T - 1 given T - 1 = m is NB(m + 1, 1/2), m = 4", "> 1e-3",
                 r.p_value, 1e-3, r.p_value > 1e-3)]
    for kind, tgt in (("uniform01", 1 / 3), ("exponential", 1.0)):
        d = quadrant.delta_moments(quadrant.IncrementLaw.named(kind), 200, 10**5, seed)
        out.append(Check(f"delta_mean_{kind}", "E[Delta(x)] -> (sigma^2 + mu^2) / (2 mu)", tgt,
                         d.mean, 3 * d.mean_se, abs(d.mean - tgt) <= 3 * d.mean_se))
    for kind, want in STATED_VERDICTS.items():
        v = quadrant.classify_quadrant(quadrant.IncrementLaw.named(kind), rng=seed)
        out.append(Check(f"verdict_{kind}", "transient iff mu^2 > sigma^2", want, v.verdict, None,
                         v.verdict == want))
    return out


CRITERIA: dict[int, tuple[str, Callable[[int], list[Check]]]] = {
    1: ("exact-law identities", criterion_1),
    2: ("second-moment identity", criterion_2),
    3: ("drift sharpness", criterion_3),
    4: ("characteristic root", criterion_4),
    5: ("renewal function consistency", criterion_5),
    6: ("renewal moments", criterion_6),
    7: ("simulation vs exact law", criterion_7),
    8: ("fast embedding", criterion_8),
    9: ("polynomial formulas", criterion_9),
    10: ("percolation", criterion_10),
    11: ("classification", criterion_11),
    12: ("tail exponents", criterion_12),
    13: ("diffusion marginal", criterion_13),
    14: ("quadrant walk", criterion_14),
}

SUITES = {
    "core": (1, 2, 3, 4, 5, 9),
    "mc": (6, 7, 8, 10, 11, 12, 13, 14),
    "all": tuple(CRITERIA),
}


def run_criterion(number: int, seed: int = 0) -> CriterionResult:
    title, fn = CRITERIA[number]
    t0 = time.perf_counter()
    checks = fn(seed)
    return CriterionResult(number, title, checks, time.perf_counter() - t0)


def run(suite: str = "core", seed: int = 0, criteria=None, progress=None) -> VerifyReport:
    """Run a suite (or an explicit list of criteria) and collect the report."""
    nums = tuple(criteria) if criteria else SUITES[suite]
    rep = VerifyReport(seed)
    for n in nums:
        res = run_criterion(n, seed)
        rep.criteria.append(res)
        if progress:
            progress(res)
    return rep
