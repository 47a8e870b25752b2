"""Simulation and exact computation for the simple harmonic urn and its relatives."""
from .exact import (TransitionRow, eulerian, mean_exact, p_exact, second_moment_exact,
                    survival_exact, transition_row)
from .kappa import KappaSpec
from .precision import PrecisionConfig, PrecisionError
from .renewal import (CharRoot, char_roots, count_moments_mc, renewal_function_asymptotic,
                      renewal_function_exact, sample_renewal_count)
from .streams import rng_stream
from .urn import (LatticeState, PathRecord, simulate_leaky, simulate_noisy, step_axis_noisy,
                  step_simple, traverse_quadrant, triangle_area)

__version__ = "0.1.0"

__all__ = [
    "CharRoot", "KappaSpec", "LatticeState", "PathRecord", "PrecisionConfig", "PrecisionError",
    "TransitionRow", "char_roots", "count_moments_mc", "eulerian", "mean_exact", "p_exact",
    "renewal_function_asymptotic", "renewal_function_exact", "rng_stream",
    "sample_renewal_count", "second_moment_exact", "simulate_leaky", "simulate_noisy",
    "step_axis_noisy", "step_simple", "survival_exact", "transition_row", "traverse_quadrant",
    "triangle_area",
]
