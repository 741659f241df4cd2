"""Decay rates for subcritical threshold-one and classic contact processes.

Simulation (forward torus runs, exact infinite-lattice duals), killed-walk
hitting probabilities, fixed-point rate bounds, and the large-dimension
limit objects, with estimators that attach honest uncertainty everywhere.
"""

from .dual import mean_front_size, survival_probability
from .engine import SimParams, run_coupled, run_forward
from .estimate import DecayEstimate, SurvivalCurve, fekete_lower, tail_regression
from .killedwalk import KilledWalkSpec, continuity_scan, hitting_mc, hitting_solve
from .lattice import Torus, unbounded_neighbors
from .spectral import (
    FixedPointResult,
    RateBounds,
    eigencheck,
    heat_kernel_return,
    k_function,
    limit_scan,
    moment_flow,
    rate_bounds,
    solve_fixed_point,
)

__version__ = "0.1.0"

__all__ = [
    "SimParams", "Torus", "unbounded_neighbors",
    "run_forward", "run_coupled",
    "survival_probability", "mean_front_size",
    "SurvivalCurve", "DecayEstimate", "fekete_lower", "tail_regression",
    "KilledWalkSpec", "hitting_solve", "hitting_mc", "continuity_scan",
    "k_function", "solve_fixed_point", "rate_bounds", "eigencheck",
    "moment_flow", "heat_kernel_return", "limit_scan",
    "FixedPointResult", "RateBounds",
]
