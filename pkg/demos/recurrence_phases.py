"""Transient, null-recurrent and positive-recurrent harmonic urns.

The noisy urn throws away kappa balls at each axis hit.  The mean discard
decides the fate of the walk: below 1/3 it escapes, above 2/3 it returns
quickly, and in between it is null recurrent.  The last part swaps the
uniform steps for other laws and classifies the resulting quadrant walk.
"""
from fractions import Fraction

from harmonic_urn.asymptotics import ClassifyConfig, classify, diffusion_marginal_test
from harmonic_urn.kappa import KappaSpec
from harmonic_urn.quadrant import IncrementLaw, classify_quadrant, simulate_crossings

cfg = ClassifyConfig(moment_samples=100_000)
for kap in (KappaSpec.point(0), KappaSpec.two_point(0, 1, Fraction(1, 2)), KappaSpec.point(1)):
    rep = classify(kap, budget=300, rng=0, config=cfg)
    print(f"{kap.label():>20}: E[kappa]={rep.mean}  verdict {rep.verdict:<19} "
          f"drift- {rep.drift_minus:+.3f}  drift+ {rep.drift_plus:+.3f}  "
          f"returns {rep.return_fraction:.2f}")

# without discards Z_k / k settles to a Gamma(2, rate 3) law
r = diffusion_marginal_test(KappaSpec.point(0), 2000, 5000, 0)
print(f"Z_k/k at k=2000: mean {r.mean:.4f} (limit 2/3), KS distance {r.ks_statistic:.3f}")

# quadrant walks with other step laws
for kind in ("uniform01", "exponential", "erlang2", "sqrt-uniform"):
    v = classify_quadrant(IncrementLaw.named(kind), budget=50_000, rng=1)
    print(f"{kind:>13}: mu={v.mu:.3f} sigma^2={v.sigma2:.3f} -> {v.verdict}")

c = simulate_crossings(IncrementLaw.named("exponential"), 5.0, 8, 2)
print("exponential steps, crossing lengths:", c.T.tolist())
