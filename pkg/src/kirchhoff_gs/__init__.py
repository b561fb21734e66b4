"""Ground state normalized solutions of the Kirchhoff equation

    -(a + b‖∇u‖²)Δu + λu = g(u) in R^N,  ‖u‖₂² = c,

for radial u on a truncated ball, N = 1, 2, 3.
"""

from .asymptotics import (ComparabilityReport, Distances, SweepOptions, SweepRecord,
                          SweepResult, comparability_report, profile_distance, rescale,
                          rescaled_residual, sweep, window_distances)
from .fiber import FiberError, FiberScan, fiber_scan, project_to_pohozaev, rescaled_projection
from .functionals import (EnergyReport, energy, fiber_action, lagrange_multiplier,
                          nehari_residual, pde_residual, pohozaev)
from .limit_profiles import (LimitProfile, ShootingError, closed_form_soliton_1d,
                             homogeneous_selfconsistency_oracle, solve_limit_profile)
from .nonlinearity import (AssumptionReport, NonlinearitySpec, SpecError, check_assumptions,
                           evaluate)
from .radial_grid import (Field, GridError, RadialGrid, build_grid, integrate, kinetic,
                          laplacian, mass, read_snapshot, resample, write_snapshot)
from .solver import (AssumptionError, ConvergenceError, GroundState, SolverOptions,
                     VariationalReport, solve_ground_state, symmetric_rearrange,
                     verify_variational_bounds)

__all__ = [
    "ComparabilityReport", "Distances", "SweepOptions", "SweepRecord", "SweepResult",
    "comparability_report", "profile_distance", "rescale", "rescaled_residual", "sweep",
    "window_distances", "FiberError", "FiberScan", "fiber_scan", "project_to_pohozaev",
    "rescaled_projection", "EnergyReport", "energy", "fiber_action", "lagrange_multiplier",
    "nehari_residual", "pde_residual", "pohozaev", "LimitProfile", "ShootingError",
    "closed_form_soliton_1d", "homogeneous_selfconsistency_oracle", "solve_limit_profile",
    "AssumptionReport", "NonlinearitySpec", "SpecError", "check_assumptions", "evaluate",
    "Field", "GridError", "RadialGrid", "build_grid", "integrate", "kinetic", "laplacian",
    "mass", "read_snapshot", "resample", "write_snapshot", "AssumptionError",
    "ConvergenceError", "GroundState", "SolverOptions", "VariationalReport",
    "solve_ground_state", "symmetric_rearrange", "verify_variational_bounds",
]

__version__ = "0.1.0"
