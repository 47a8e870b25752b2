"""Oriented percolation on the winding cover of the punctured lattice.

Every site picks one out-edge with the simple urn's probabilities, all drawn
lazily from a seeded store.  Following the out-edges from a site traces a
harmonic urn path; paths from different starts tend to merge.
"""
import numpy as np

from harmonic_urn.percolation import (CoverVertex, EdgeStore, coalescence_trials, dual_crossings,
                                      in_graph_many, solve_T, trace, trace_and_coalesce)

store = EdgeStore(7)
path = trace(CoverVertex(4, 0, 0), store, 40)
print("first sites from (4, 0):", [(v.x, v.y, v.winding) for v in path[:12]])

for seed in range(20):
    c = trace_and_coalesce(CoverVertex(5, 0, 0), CoverVertex(9, 0, 0), EdgeStore(seed), 24)
    if not c.exhausted:
        break
print(f"store {seed}: paths from (5,0) and (9,0) meet at {c.meet} after {c.steps} steps")

for budget in (4, 12, 24, 48):
    frac = np.mean([not t.exhausted for t in coalescence_trials(5, 9, 100, 0, budget)])
    print(f"coalesced within {budget:2d} quadrant crossings: {frac:.2f}")

# the dual paths run clockwise between primal paths and never cross them
print("dual/primal crossings:", sum(dual_crossings(EdgeStore(s), 8) for s in range(4)))

# mean in-graph size above (0, m) equals m times the mean traversal time from (m, 0)
T = solve_T(5)
for m in (1, 3):
    s = in_graph_many(0, m, 50_000, 1)
    print(f"E I(0,{m}): MC {s.mean():.3f}  exact {m * T(m, 0):.3f}")
