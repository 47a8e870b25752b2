"""Lamperti-scale diagnostics for the noisy embedded chain.

On the square-root scale ``W_k = Z~_k^{1/2}`` the chain has increments with
mean ``(1 - 2E[kappa]) / (4x)`` and second moment ``1/6`` to leading order,
so the statistics ``2x mu_1 - mu_2`` and ``2x mu_1 + mu_2`` tend to
``1/3 - E[kappa]`` and ``2/3 - E[kappa]``.  Their signs separate transience,
null recurrence and positive recurrence at ``E[kappa] = 1/3`` and ``2/3``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from .kappa import KappaSpec
from .streams import RngLike, as_generator, blocks
from .urn import simulate_noisy_many, traverse_many
from .zchain import ZChain

TRANSIENT, NULL_RECURRENT, POSITIVE_RECURRENT = "transient", "null-recurrent", "positive-recurrent"


# --------------------------------------------------------------------------
# increment moments

@dataclass(frozen=True)
class MomentProfile:
    """Empirical ``mu_1``, ``mu_2`` of ``W``-increments on a grid of ``x``."""

    x: np.ndarray
    mu1: np.ndarray
    mu1_se: np.ndarray
    mu2: np.ndarray
    mu2_se: np.ndarray
    drift_minus: np.ndarray
    drift_minus_se: np.ndarray
    drift_plus: np.ndarray
    drift_plus_se: np.ndarray
    counts: np.ndarray

    def at(self, x: int) -> dict:
        i = int(np.flatnonzero(self.x == x)[0])
        return {k: float(getattr(self, k)[i]) for k in
                ("mu1", "mu1_se", "mu2", "mu2_se", "drift_minus", "drift_minus_se",
                 "drift_plus", "drift_plus_se")}


def _kappa_after(z: np.ndarray, kappa: KappaSpec, rng: np.random.Generator) -> np.ndarray:
    k = kappa.sample(rng, z.size)
    return z - np.minimum(k, z - 1)


def _increments(kappa: KappaSpec, x: int, n: int, rng: RngLike, method: str,
                chain: ZChain | None) -> np.ndarray:
    z = x * x
    if method == "table":
        zn = chain.steps(z, n, rng, tag=f"incr-{x}")
    elif method == "urn":
        zr = traverse_many(z, n, rng, tag=f"incr-urn-{x}")["z_next"]
        zn = _kappa_after(zr, kappa, as_generator(rng, f"incr-kappa-{x}"))
    else:
        raise ValueError("method must be 'table' or 'urn'")
    return np.sqrt(zn.astype(float)) - x


def increment_moments(kappa: KappaSpec, x_grid, samples_per_point: int, rng: RngLike,
                      method: str = "table") -> MomentProfile:
    """Monte Carlo increment moments of ``W`` from ``Z~ = x^2``.

    Parameters
    ----------
    method : {"table", "urn"}
        ``"table"`` draws the next state from the tabulated transition law;
        ``"urn"`` simulates the quadrant traversal step by step and then
        applies the discard.
    """
    if not kappa.mgf_ok:
        raise ValueError("kappa needs exponential moments")
    xs = np.array(sorted(int(v) for v in x_grid))
    if xs.size == 0 or xs.min() < 4:
        raise ValueError("grid values must be at least 4")
    chain = ZChain(kappa, table_max=max(2000, int(xs.max()) ** 2)) if method == "table" else None
    cols = {k: [] for k in ("mu1", "mu1_se", "mu2", "mu2_se", "dm", "dm_se", "dp", "dp_se")}
    for x in xs:
        d = _increments(kappa, int(x), samples_per_point, rng, method, chain)
        s = math.sqrt(d.size)
        d2 = d * d
        cols["mu1"].append(d.mean())
        cols["mu1_se"].append(d.std(ddof=1) / s)
        cols["mu2"].append(d2.mean())
        cols["mu2_se"].append(d2.std(ddof=1) / s)
        for key, sign in (("dm", -1.0), ("dp", 1.0)):
            v = 2 * x * d + sign * d2
            cols[key].append(v.mean())
            cols[key + "_se"].append(v.std(ddof=1) / s)
    a = {k: np.array(v) for k, v in cols.items()}
    return MomentProfile(xs, a["mu1"], a["mu1_se"], a["mu2"], a["mu2_se"], a["dm"], a["dm_se"],
                         a["dp"], a["dp_se"], np.full(xs.size, samples_per_point))


# --------------------------------------------------------------------------
# classification

def verdict_from_mean(mean: Fraction) -> str:
    """Phase of the embedded chain from ``E[kappa]`` alone."""
    if mean < Fraction(1, 3):
        return TRANSIENT
    if mean <= Fraction(2, 3):
        return NULL_RECURRENT
    return POSITIVE_RECURRENT


def verdict_from_drift(dm: float, dm_se: float, dp: float, dp_se: float, k: float = 3.0) -> str | None:
    """Phase suggested by the drift statistics when their bands exclude 0, else None."""
    if dm - k * dm_se > 0:
        return TRANSIENT
    if dp + k * dp_se < 0:
        return POSITIVE_RECURRENT
    if dm + k * dm_se < 0 and dp - k * dp_se > 0:
        return NULL_RECURRENT
    return None


@dataclass
class ClassifyConfig:
    """Budgets and pilot-calibrated cut-offs for :func:`classify`."""

    return_paths: int = 10_000
    start: int = 100
    escape: int = 100_000
    max_steps: int = 10**8
    table_max: int = 10_000
    gauss_above: int = 10_000
    moment_x: int = 30
    moment_samples: int = 1_000_000
    transient_max: float = 0.9
    recurrent_min: float = 0.99
    band_k: float = 3.0


@dataclass
class ClassificationReport:
    kappa: str
    mean: Fraction
    verdict: str
    inconclusive: bool
    drift_minus: float
    drift_minus_se: float
    drift_plus: float
    drift_plus_se: float
    drift_verdict: str | None
    return_fraction: float
    returns: int
    escapes: int
    capped: int
    return_check: bool | None
    urn_process: str
    config: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        """Verdict never contradicts a drift statistic whose band excludes 0."""
        return self.drift_verdict is None or self.drift_verdict == self.verdict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mean"] = str(self.mean)
        d["consistent"] = self.consistent
        return d


def urn_process_phase(mean: Fraction) -> str:
    """Phase of the noisy urn itself; ``E[kappa] = 1`` is left open."""
    if mean < Fraction(1, 3):
        return TRANSIENT
    if mean < 1:
        return NULL_RECURRENT
    if mean > 1:
        return POSITIVE_RECURRENT
    return "open"


def return_fraction(kappa: KappaSpec, paths: int, rng: RngLike, start: int = 100,
                    escape: int = 100_000, max_steps: int = 10**8, table_max: int = 10_000,
                    gauss_above: int = 10_000) -> dict:
    """Fraction of chains from ``start`` reaching 1 before exceeding ``escape``."""
    chain = ZChain(kappa, table_max=table_max, gauss_above=gauss_above)
    r = chain.returns(start, escape, paths, rng, max_steps=max_steps)
    ret, esc, cap = int((r == 1).sum()), int((r == 0).sum()), int((r == -1).sum())
    return {"fraction": ret / paths, "returns": ret, "escapes": esc, "capped": cap}


def classify(kappa: KappaSpec, budget: int | None = None, rng: RngLike = 0,
             config: ClassifyConfig | None = None) -> ClassificationReport:
    """Recurrence class of ``Z~`` with empirical corroboration.

    The verdict comes from the exact ``E[kappa]``.  It is cross-checked by
    the drift statistics at ``config.moment_x`` and by the return fraction;
    ``budget`` overrides the number of return paths.  The report is
    inconclusive when ``E[kappa]`` lies within the drift band of 1/3 or 2/3.
    """
    if not kappa.mgf_ok:
        raise ValueError("kappa needs exponential moments")
    cfg = config or ClassifyConfig()
    if budget is not None:
        cfg = ClassifyConfig(**{**asdict(cfg), "return_paths": int(budget)})
    mean = kappa.mean
    verdict = verdict_from_mean(mean)
    prof = increment_moments(kappa, [cfg.moment_x], cfg.moment_samples, rng)
    m = prof.at(cfg.moment_x)
    band = cfg.band_k * max(m["drift_minus_se"], m["drift_plus_se"])
    inconclusive = min(abs(float(mean) - 1 / 3), abs(float(mean) - 2 / 3)) < band
    rf = return_fraction(kappa, cfg.return_paths, rng, cfg.start, cfg.escape, cfg.max_steps,
                         cfg.table_max, cfg.gauss_above)
    if verdict == TRANSIENT:
        check = rf["fraction"] <= cfg.transient_max
    elif verdict == POSITIVE_RECURRENT:
        check = rf["fraction"] >= cfg.recurrent_min
    else:
        check = None
    return ClassificationReport(
        kappa=kappa.label(), mean=mean, verdict=verdict, inconclusive=inconclusive,
        drift_minus=m["drift_minus"], drift_minus_se=m["drift_minus_se"],
        drift_plus=m["drift_plus"], drift_plus_se=m["drift_plus_se"],
        drift_verdict=verdict_from_drift(m["drift_minus"], m["drift_minus_se"],
                                         m["drift_plus"], m["drift_plus_se"], cfg.band_k),
        return_fraction=rf["fraction"], returns=rf["returns"], escapes=rf["escapes"],
        capped=rf["capped"], return_check=check, urn_process=urn_process_phase(mean),
        config=asdict(cfg),
    )


# --------------------------------------------------------------------------
# diffusion limit

@dataclass(frozen=True)
class DiffusionReport:
    k: int
    samples: int
    shape: float
    rate: float
    ks_statistic: float
    ks_pvalue: float
    mean: float
    mean_se: float
    target_mean: float


def gamma_limit(kappa: KappaSpec) -> tuple[float, float]:
    """Shape ``2 - 3E[kappa]`` and rate 3 of the limiting law of ``Z~_k / k``."""
    return 2.0 - 3.0 * float(kappa.mean), 3.0


def diffusion_marginal_test(kappa: KappaSpec, k: int, samples: int, rng: RngLike,
                            z0: int = 1, table_max: int = 10_000,
                            gauss_above: int | None = None) -> DiffusionReport:
    """KS distance between ``Z~_k / k`` and its Gamma limit.

    ``gauss_above`` switches the chain to its normal step approximation at
    large states, which long horizons need for speed.
    """
    if kappa.mean >= Fraction(2, 3):
        raise ValueError("the diffusion limit needs E[kappa] < 2/3")
    if k < 1000:
        raise ValueError("k must be at least 1000")
    chain = ZChain(kappa, table_max=table_max, gauss_above=gauss_above)
    r = chain.at_time(z0, k, samples, rng).astype(float) / k
    shape, rate = gamma_limit(kappa)
    ks = stats.kstest(r, stats.gamma(shape, scale=1.0 / rate).cdf)
    return DiffusionReport(k, samples, shape, rate, float(ks.statistic), float(ks.pvalue),
                           float(r.mean()), float(r.std(ddof=1) / math.sqrt(samples)),
                           2.0 / 3.0 - float(kappa.mean))


# --------------------------------------------------------------------------
# passage-time tails

@dataclass(frozen=True)
class TailFit:
    exponent: float
    ci: tuple[float, float]
    target: float
    fitted_points: int
    censored: int
    samples: int


def _slope_from_counts(vals: np.ndarray, counts: np.ndarray, upper: float) -> tuple[float, int]:
    n = counts.sum()
    surv = (n - np.concatenate(([0], np.cumsum(counts)[:-1]))) / n
    present = counts > 0
    vals, surv = vals[present], surv[present]
    # P(X >= t) at the distinct values above the (1 - upper) quantile, minus the last point
    keep = (surv <= upper) & (surv > 1.0 / n)
    if keep.sum() < 3:
        raise ValueError("too few distinct values in the upper tail")
    slope = np.polyfit(np.log(vals[keep]), np.log(surv[keep]), 1)[0]
    return -float(slope), int(keep.sum())


def survival_slope(x: np.ndarray, upper: float = 0.1) -> tuple[float, int]:
    """Exponent from a log-log fit of the empirical survival over the upper fraction.

    The fit uses the distinct values ``t`` with ``P(X >= t) <= upper``,
    excluding the largest one (survival ``1/n``), and returns the negated
    slope with the number of fitted points.
    """
    vals, counts = np.unique(x, return_counts=True)
    return _slope_from_counts(vals, counts, upper)


def _fit(x: np.ndarray, target: float, resamples: int, rng: np.random.Generator,
         censored: int, total: int) -> TailFit:
    vals, counts = np.unique(x, return_counts=True)
    est, npts = _slope_from_counts(vals, counts, 0.1)
    # a bootstrap resample of the data is a multinomial draw over the distinct values
    freq = counts / counts.sum()
    boots = np.array([_slope_from_counts(vals, rng.multinomial(x.size, freq), 0.1)[0]
                      for _ in range(resamples)])
    lo, hi = np.quantile(boots, [0.025, 0.975])
    return TailFit(est, (float(lo), float(hi)), target, npts, censored, total)


def tail_exponent_tau_q(kappa: KappaSpec, samples: int, rng: RngLike, z0: int = 1,
                        resamples: int = 500, max_steps: int = 10**7) -> dict[str, TailFit]:
    """Fitted tail exponents of ``tau_q`` and ``tau``.

    The targets are ``3E[kappa] - 1`` and half of it.  At least ``10^5``
    samples are required; censored paths are dropped from the fit.
    """
    if kappa.mean < Fraction(1, 3):
        raise ValueError("tail exponents need E[kappa] >= 1/3")
    if samples < 100_000:
        raise ValueError("at least 1e5 samples are required")
    chain = ZChain(kappa)
    tq, tt = chain.passage_times(z0, samples, rng, max_steps=max_steps)
    g = as_generator(rng, "tail-bootstrap")
    target = 3.0 * float(kappa.mean) - 1.0
    out = {}
    for name, arr, tgt in (("tau_q", tq, target), ("tau", tt, target / 2)):
        ok = arr[arr >= 0]
        if ok.size < samples // 2:
            raise ValueError(f"insufficient uncensored mass for {name}")
        out[name] = _fit(ok.astype(float), tgt, resamples, g, int(samples - ok.size), samples)
    return out


@dataclass(frozen=True)
class AreaDiagnostic:
    sizes: np.ndarray
    means: np.ndarray
    censored: int


def area_mean_diagnostic(kappa: KappaSpec, z0: int, samples: int, rng: RngLike,
                         checkpoints: int = 4, step_cap: int = 10**9) -> AreaDiagnostic:
    """Running sample means of the swept area over nested samples (unbounded growth expected)."""
    r = simulate_noisy_many(z0, kappa, samples, rng, step_cap=step_cap, tag="area-mean")
    ok = r["tau"] >= 0
    a = r["area2"][ok] / 2.0
    sizes = np.unique(np.geomspace(max(a.size // 10 ** (checkpoints - 1), 1), a.size,
                                   checkpoints).astype(int))
    return AreaDiagnostic(sizes, np.array([a[:n].mean() for n in sizes]), int((~ok).sum()))
