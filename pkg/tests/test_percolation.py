import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from harmonic_urn.embeddings import tau_f_poly_exact
from harmonic_urn.exact import p_exact
from harmonic_urn.percolation import (CoverVertex, EdgeStore, coalescence_trials, dual_crossings,
                                      dual_path, h_first_axis, heavy_tail_diagnostic,
                                      in_graph_many, in_graph_restricted, out_edge, phi_first_axis,
                                      phi_map, solve_T, store_seed, trace, trace_and_coalesce)
from harmonic_urn.stats import chi_square_gof
from harmonic_urn.streams import tag_id


# --- out-edges --------------------------------------------------------------

def test_positive_axis_goes_up():
    for seed in range(200):
        st_ = EdgeStore(seed)
        for x in (1, 4, 17):
            h = out_edge(CoverVertex(x, 0, 0), st_)
            assert (h.x, h.y) == (x, 1)


def test_edge_law_at_two_three():
    n = 100_000
    left = sum(out_edge(CoverVertex(2, 3, 0), EdgeStore(s)) == CoverVertex(1, 3, 0)
               for s in range(n))
    assert abs(left / n - 0.6) <= 3 * math.sqrt(0.24 / n)


def test_repeat_queries_are_identical():
    st_ = EdgeStore(9)
    v = CoverVertex(-3, 5, 1)
    first = out_edge(v, st_)
    assert all(out_edge(v, st_) == first for _ in range(10))
    # a fresh store with the same seed derives the same edge
    assert out_edge(v, EdgeStore(9)) == first


def test_origin_is_not_a_vertex():
    with pytest.raises(ValueError):
        CoverVertex(0, 0, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**40), st.integers(1, 30))
def test_paths_turn_strictly_anticlockwise(seed, z):
    path = trace(CoverVertex(z, 0, 0), EdgeStore(seed), 300)
    for a, b in zip(path, path[1:]):
        assert abs(a.x - b.x) + abs(a.y - b.y) == 1
        assert a.x * b.y - a.y * b.x > 0
        assert b.winding - a.winding in (0, 1)


def test_winding_counts_axis_crossings():
    path = trace(CoverVertex(3, 0, 0), EdgeStore(4), 2000)
    for v in path:
        assert v.winding % 4 == (0 if v.x > 0 and v.y >= 0 else
                                 1 if v.x <= 0 and v.y > 0 else
                                 2 if v.x < 0 and v.y <= 0 else 3)


def test_projected_path_is_the_urn():
    y = h_first_axis(5, 200_000, 1)
    assert chi_square_gof(y, lambda m: float(p_exact(5, m)), support_min=1).p_value > 1e-3


# --- coalescence ------------------------------------------------------------

def test_identical_starts_meet_at_once():
    c = trace_and_coalesce(CoverVertex(5, 0, 0), CoverVertex(5, 0, 0), EdgeStore(0))
    assert c.meet == CoverVertex(5, 0, 0) and c.steps == (0, 0)


def test_paths_agree_after_meeting():
    met = 0
    for seed in range(30):
        st_ = EdgeStore(seed)
        c = trace_and_coalesce(CoverVertex(5, 0, 0), CoverVertex(9, 0, 0), st_, 24)
        if c.exhausted:
            continue
        met += 1
        a = trace(CoverVertex(5, 0, 0), st_, c.steps[0] + 1000)[c.steps[0]:]
        b = trace(CoverVertex(9, 0, 0), st_, c.steps[1] + 1000)[c.steps[1]:]
        assert a == b and a[0] == c.meet
    assert met > 0


def test_coalescence_fraction_grows_with_budget():
    fr = [np.mean([not c.exhausted for c in coalescence_trials(5, 9, 100, 0, b)])
          for b in (4, 12, 24)]
    assert fr[0] <= fr[1] <= fr[2] and fr[2] > 0.5


def test_store_seeds_differ_by_index():
    t = np.uint64(tag_id("coalesce"))
    seeds = {int(store_seed(np.uint64(1), t, np.uint64(i))) for i in range(1000)}
    assert len(seeds) == 1000


# --- dual graph -------------------------------------------------------------

def test_phi_examples():
    assert phi_map(3.5, 0.5) == (4, 0)
    assert phi_map(3.5, -0.5) == (3, 1)


def test_phi_rejects_lattice_points():
    with pytest.raises(ValueError):
        phi_map(3, 0.5)


@pytest.mark.parametrize("seed", range(8))
def test_dual_never_crosses_primal(seed):
    assert dual_crossings(EdgeStore(seed), half_width=10) == 0


def test_dual_paths_turn_clockwise():
    path = dual_path(4.5, 0.5, EdgeStore(3), 500)
    for (x0, y0, _), (x1, y1, _) in zip(path, path[1:]):
        assert abs(x1 - x0) + abs(y1 - y0) == 1
        assert x0 * y1 - y0 * x1 < 0


def test_phi_image_is_the_leaky_urn():
    # from (5, 0) the leaky rule moves to (4, 1); the next axis height is Z_1 from 4
    m = phi_first_axis(5, 200_000, 2)
    assert m.min() >= 1
    assert chi_square_gof(m, lambda k: float(p_exact(4, k)), support_min=1).p_value > 1e-3


# --- in-graphs and the traversal-time table ---------------------------------

def test_in_graph_on_the_axis_is_empty():
    assert in_graph_restricted(3, 0, EdgeStore(0)) == 0
    assert np.all(in_graph_many(6, 0, 10, 0) == 0)


def test_in_graph_of_unit_site():
    s = in_graph_many(0, 1, 100_000, 5).astype(float)
    assert np.all(s >= 1)
    assert abs(s.mean() - (math.e - 1)) <= 3 * s.std(ddof=1) / math.sqrt(s.size)


@pytest.mark.parametrize("m", range(1, 6))
def test_in_graph_mean_matches_traversal_time(m):
    T = solve_T(5)
    s = in_graph_many(0, m, 100_000, 6).astype(float)
    assert abs(s.mean() - m * T(m, 0)) <= 3 * s.std(ddof=1) / math.sqrt(s.size)


def test_in_graph_heavy_tail_diagnostic():
    d = heavy_tail_diagnostic(CoverVertex(0, 1, 1), 100_000, 3)
    # the mean keeps climbing while the square-root moment settles
    assert d.mean_growth > 3
    assert abs(d.p_moments[-1] / d.p_moments[-2] - 1) < 0.15


def test_traversal_time_table():
    T = solve_T(10, 1e-12)
    assert np.all(T.table[0] == 0)
    assert abs(T(1, 0) - (math.e - 1)) < 1e-12
    with mpmath.workprec(128):
        for n in range(1, 11):
            assert abs(T(n, 0) - float(tau_f_poly_exact(n))) <= 2e-12 + T.error_bound[n]
    assert np.all(T.error_bound < 1e-12)
