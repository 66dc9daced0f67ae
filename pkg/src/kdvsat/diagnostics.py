"""Lyapunov energy, decay-rate fitting, and inner-product checks.

The checks mirror, in discrete form, the quantities the stability
analysis is built from: the energy E = (1/2) int y^2, the feedback
dissipation rate -gain * int y*sat(y), the dissipativity of the closed
loop operator, two integration-by-parts identities for moments against
x, and the graph-norm bound used in the precompactness argument.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Grid, SaturationLevels, State, sat_state
from .discretization import (
    dx_inner,
    dx_norm,
    first_derivative_matrix,
    generator,
    third_derivative_matrix,
)
from .errors import DimensionMismatch, EmptyWindow, NonPositiveEnergyInWindow

ENERGY_FLOOR = 1e-30  # samples at or below this are excluded from log fits


def energy_from_values(grid: Grid, values: np.ndarray) -> float:
    """E = (1/2) * dx * sum of interior y_i^2 (boundary nodes contribute 0)."""
    return 0.5 * float(grid.dx * np.dot(values, values))


def energy(state: State) -> float:
    """Lyapunov energy of a state."""
    return energy_from_values(state.grid, state.values)


@dataclass(frozen=True)
class EnergyTrace:
    """Time series of the Lyapunov energy along a run."""

    times: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        e = np.array(self.energies, dtype=float)
        if t.ndim != 1 or t.shape != e.shape:
            raise ValueError("times and energies must be 1-D arrays of equal length")
        if t.size and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not (np.all(np.isfinite(e)) and np.all(e >= 0)):
            raise ValueError("energies must be finite and non-negative")
        t.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "energies", e)


def fit_decay_rate(trace: EnergyTrace, t_start: float, t_end: float) -> float:
    """Least-squares decay rate of log E(t) over [t_start, t_end], negated.

    A positive return value means decay.  Samples with E <= 1e-30 are
    excluded to avoid log underflow.
    """
    mask = (trace.times >= t_start) & (trace.times <= t_end)
    if np.count_nonzero(mask) < 2:
        raise EmptyWindow(
            f"window [{t_start}, {t_end}] holds {np.count_nonzero(mask)} samples"
        )
    t = trace.times[mask]
    e = trace.energies[mask]
    usable = e > ENERGY_FLOOR
    if np.count_nonzero(usable) < 2:
        raise NonPositiveEnergyInWindow(
            f"window [{t_start}, {t_end}] holds fewer than 2 positive energies"
        )
    t, e = t[usable], e[usable]
    design = np.column_stack([t, np.ones_like(t)])
    slope, _ = np.linalg.lstsq(design, np.log(e), rcond=None)[0]
    return -float(slope)


def sector_gap(state: State, levels: SaturationLevels, gain: float) -> float:
    """-gain * dx * sum y_i * sat(y_i): the feedback's energy drain rate.

    Nonpositive for every state and gain >= 0 by the sector condition
    s * sat(s) >= 0.
    """
    clipped = np.clip(state.values, -levels.u_min, levels.u_max)
    return -gain * dx_inner(state.grid, state.values, clipped)


def dissipativity_residual(
    u: State, v: State, gain: float, levels: SaturationLevels
) -> float:
    """<A_h u - A_h v, u - v> with A_h w = L_h w - gain * sat(w), dx-weighted.

    Nonpositive (up to round-off) for every pair: the linear part by the
    boundary closure, the saturation part by monotonicity of sat.
    """
    if u.grid != v.grid:
        raise DimensionMismatch("states live on different grids")
    lh = generator(u.grid)
    w = u.values - v.values
    lin = lh.apply_array(w)
    s = sat_state(u, levels).values - sat_state(v, levels).values
    return dx_inner(u.grid, lin - gain * s, w)


def identity_check_xzzppp(z: State) -> tuple[float, float]:
    """Discrete sides of   int x z z''' dx = (3/2) ||z'||^2.

    Holds in the continuum for z with z(0) = z(L) = z'(L) = 0; both sides
    are evaluated with the module's difference operators and converge to
    each other under refinement.  The caller compares.
    """
    grid = z.grid
    x = grid.interior_nodes()
    d3 = third_derivative_matrix(grid).apply_array(z.values)
    d1 = first_derivative_matrix(grid).apply_array(z.values)
    lhs = dx_inner(grid, x * z.values, d3)
    rhs = 1.5 * dx_inner(grid, d1, d1)
    return lhs, rhs


def identity_check_xzzp(z: State) -> tuple[float, float]:
    """Discrete sides of   int x z z' dx = -(1/2) ||z||^2.

    Only z(0) = z(L) = 0 is used in the continuum identity.
    """
    grid = z.grid
    x = grid.interior_nodes()
    d1 = first_derivative_matrix(grid).apply_array(z.values)
    lhs = dx_inner(grid, x * z.values, d1)
    rhs = -0.5 * dx_inner(grid, z.values, z.values)
    return lhs, rhs


def graph_bound_check(u: State) -> tuple[float, float]:
    """Discrete sides of   ||u'||^2 <= 2 ||u' + u'''||^2 + (8 L^2 / 5) ||u||^2.

    The caller asserts lhs <= rhs * (1 + tol).
    """
    grid = u.grid
    d1 = first_derivative_matrix(grid).apply_array(u.values)
    d3 = third_derivative_matrix(grid).apply_array(u.values)
    lhs = dx_inner(grid, d1, d1)
    rhs = 2.0 * dx_inner(grid, d1 + d3, d1 + d3) + (
        8.0 * grid.length**2 / 5.0
    ) * dx_inner(grid, u.values, u.values)
    return lhs, rhs
