"""Simulation and analysis toolkit for the linear KdV equation on a
bounded interval under saturated distributed feedback.

The public surface mirrors the module split: grids/states/saturation in
core, banded difference operators in discretization, Crank-Nicolson
stepping in integrator, energy and inequality checks in diagnostics,
critical lengths and spectra in spectral, and the nonlinear resolvent
solver in resolvent.  The `kdvsat` console script exposes the scenario
runner, sweeps, and CSV emitters.
"""
from .core import (
    FeedbackLaw,
    Grid,
    LinearFeedback,
    OpenLoop,
    SaturatedFeedback,
    SaturationLevels,
    State,
    init_profile,
    make_grid,
    sat,
    sat_state,
)
from .diagnostics import (
    EnergyTrace,
    dissipativity_residual,
    energy,
    fit_decay_rate,
    graph_bound_check,
    identity_check_xzzp,
    identity_check_xzzppp,
    sector_gap,
)
from .discretization import (
    BandedLU,
    BandedOperator,
    apply,
    dx_inner,
    dx_norm,
    first_derivative_matrix,
    generator,
    third_derivative_matrix,
)
from .integrator import SimConfig, Stepper, Trajectory, make_stepper, simulate, step
from .resolvent import (
    ResolventProblem,
    ResolventSolution,
    apriori_bound_check,
    resolvent_fixed_point,
    solve_linear_bvp,
)
from .spectral import (
    CriticalLength,
    SpectrumResult,
    critical_lengths,
    is_critical,
    spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "BandedLU",
    "BandedOperator",
    "CriticalLength",
    "EnergyTrace",
    "FeedbackLaw",
    "Grid",
    "LinearFeedback",
    "OpenLoop",
    "ResolventProblem",
    "ResolventSolution",
    "SaturatedFeedback",
    "SaturationLevels",
    "SimConfig",
    "SpectrumResult",
    "State",
    "Stepper",
    "Trajectory",
    "apply",
    "apriori_bound_check",
    "critical_lengths",
    "dissipativity_residual",
    "dx_inner",
    "dx_norm",
    "energy",
    "first_derivative_matrix",
    "fit_decay_rate",
    "generator",
    "graph_bound_check",
    "identity_check_xzzp",
    "identity_check_xzzppp",
    "init_profile",
    "is_critical",
    "make_grid",
    "make_stepper",
    "resolvent_fixed_point",
    "sat",
    "sat_state",
    "sector_gap",
    "simulate",
    "solve_linear_bvp",
    "spectrum",
    "step",
    "third_derivative_matrix",
]
