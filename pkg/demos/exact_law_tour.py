"""A tour of the exact one-step law of the simple harmonic urn.

From height n on the positive axis the urn sweeps one quadrant and lands at
height m on the next axis.  The law of m is a ratio of Eulerian numbers, so
everything below is an exact rational computation.
"""
import mpmath

from harmonic_urn import eulerian, mean_exact, p_exact, rng_stream, survival_exact, traverse_quadrant
from harmonic_urn.exact import recip_identities, transition_row
from harmonic_urn.urn import traverse_many

# the row for n = 3 is a proper distribution over m >= 1
row = transition_row(3, tail=1e-15)
print("P(3 -> m), first few m:")
for m in range(1, 7):
    print(f"  m={m}: {p_exact(3, m)}  ~ {float(p_exact(3, m)):.6f}")
print(f"mass on m <= {row.M}: {float(row.partial_sum()):.15f} (tail bound {row.tail_bound:.1e})")
print("brackets one:", row.brackets_one())

# a quick sanity check against the combinatorics: Eulerian rows sum to n!
print("sum_k A(5, k) =", sum(eulerian(5, k) for k in range(1, 6)))

# the median of the step is its starting point
for n in (2, 5, 9):
    print(f"P(Z_1 <= {n} | Z_0 = {n}) = {1 - survival_exact(n, n)}")

# drift: E[Z_1] - n stays close to 2/3
for n in (1, 5, 20):
    c = mean_exact(n)
    with mpmath.workprec(128):
        print(f"E[Z_1 | Z_0 = {n}] - {n} = {mpmath.nstr(c.value - n, 12)}")

# reciprocal moments, which make the chain transient
ids = recip_identities(10)
print(f"E[1/Z_1 | Z_0 = 10] = {ids['E_recip']:.12f}, transience margin {ids['transience_margin']:.3e}")

# and Monte Carlo agrees with the exact law
z = traverse_many(3, 200_000, 0)["z_next"]
for m in (1, 2, 3):
    print(f"m={m}: simulated {(z == m).mean():.4f}  exact {float(p_exact(3, m)):.4f}")

# one traversal in detail
one = traverse_quadrant(4, rng_stream(1, "demo", 0))
print("one traversal from 4:", {k: one[k] for k in ("z_next", "steps", "area")})
