"""Renewal counts of uniform sums, and the continuous-time pictures of the urn.

Counting how many Uniform(0, 1) variables fit below t gives the number of
lattice steps in a traversal, so the renewal function doubles as the mean
traversal time.  The fast and slow embeddings give two exact continuous-time
versions of the same walk.
"""
import mpmath

from harmonic_urn import (char_roots, count_moments_mc, renewal_function_asymptotic,
                          renewal_function_exact)
from harmonic_urn.embeddings import simulate_fast, tau_f_mc, tau_f_poly_exact
from harmonic_urn.streams import rng_stream

# exact renewal function against its pole expansion
for t in (2.5, 10.0, 30.0):
    exact = renewal_function_exact(t)
    approx = renewal_function_asymptotic(t, pole_pairs=10)
    print(f"N({t:5.1f}) exact {mpmath.nstr(exact, 15):>20}   "
          f"2t + 2/3 {2 * t + 2 / 3:8.4f}   pole gap {float(abs(exact - approx)):.1e}")

# the roots that drive the oscillating corrections
for r in char_roots(3):
    print(f"root {r.index}: {mpmath.nstr(r.value, 12)}")

# Monte Carlo check of the count at t = 10
mc = count_moments_mc(10.0, 200_000, 0)
print(f"MC mean N(10) = {mc.mean:.4f} +/- {mc.mean_se:.4f}, variance {mc.variance:.3f}")

# fast embedding: one run from (3, 0) until it next touches an axis
run = simulate_fast(3, 0, rng_stream(0, "demo-fast", 0))
print("fast run:", run)

# expected fast time to leave the quadrant, exact vs Monte Carlo
for n in (1, 4, 8):
    est = tau_f_mc(n, 100_000, n)["tau"]
    with mpmath.workprec(128):
        exact = float(tau_f_poly_exact(n))
    print(f"n={n}: exact {exact:.6f}  MC {est.mean:.6f} +/- {est.se:.6f}")
