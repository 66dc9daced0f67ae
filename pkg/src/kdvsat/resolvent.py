"""Fixed-point solver for the nonlinear resolvent problem

    lt*u~ + u~''' + u~' + gain * sat(u~) = lt*u,
    u~(0) = u~(L) = u~'(L) = 0,

with lt > 0.  With the discrete generator L_h (= -d/dx - d3/dx3) this is
(lt*I - L_h) u~ + gain*sat(u~) = lt*u.  Since the quadratic form of L_h
is nonpositive, lt*I - L_h has smallest singular value >= lt, so the
linear solve is well posed and the Picard map

    u~  ->  (lt*I - L_h)^{-1} (lt*u - gain * sat(u~))

is Lipschitz with constant gain/lt: a contraction whenever gain < lt.
Picard is used rather than Newton because sat is non-smooth at its break
points, where a Newton derivative does not exist.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import SaturationLevels, State
from .discretization import dx_norm, generator
from .errors import AlphaNotPositive, NoConvergence

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True)
class ResolventProblem:
    """Data of one resolvent solve: lt = 1/lambda, gain, levels, and u."""

    lambda_tilde: float
    gain: float
    levels: SaturationLevels
    rhs: State

    def __post_init__(self):
        if not (np.isfinite(self.lambda_tilde) and self.lambda_tilde > 0):
            raise ValueError(f"lambda_tilde must be positive, got {self.lambda_tilde}")
        # gain = 0 is admitted: the saturation term vanishes and the
        # problem degenerates to the linear solve.
        if not (np.isfinite(self.gain) and self.gain >= 0):
            raise ValueError(f"gain must be non-negative, got {self.gain}")


@dataclass(frozen=True)
class ResolventSolution:
    """Converged (or final) iterate with its defect norm and solve count."""

    solution: State
    residual_norm: float
    iterations: int


def _shifted_lu(lambda_tilde: float, grid):
    return generator(grid).scaled(-1.0).plus_identity(lambda_tilde).lu()


def solve_linear_bvp(lambda_tilde: float, g: State) -> State:
    """Solve the banded system (lt*I - L_h) z = g.

    Unique because every eigenvalue of L_h has real part <= 0 < lt.
    """
    if not (np.isfinite(lambda_tilde) and lambda_tilde > 0):
        raise ValueError(f"lambda_tilde must be positive, got {lambda_tilde}")
    lu = _shifted_lu(lambda_tilde, g.grid)
    return State(g.grid, lu.solve(g.values), g.time)


def resolvent_fixed_point(
    problem: ResolventProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> ResolventSolution:
    """Picard-iterate u~_{k+1} = (lt*I - L_h)^{-1}(lt*u - gain*sat(u~_k)).

    Starts from u~_0 = 0 and stops when the dx-norm of the iterate
    difference drops below tol.  Raises NoConvergence (carrying the final
    partial solution) when max_iter is exhausted and the defect is still
    above tol; outside the contractive regime gain < lt this can happen
    even though a solution exists.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    lt, gain, levels = problem.lambda_tilde, problem.gain, problem.levels
    if gain / lt >= 1.0:
        warnings.warn(
            f"gain/lambda_tilde = {gain / lt:g} >= 1: the Picard map is not a "
            "contraction and may fail to converge",
            RuntimeWarning,
            stacklevel=2,
        )
    grid = problem.rhs.grid
    u = problem.rhs.values
    lu = _shifted_lu(lt, grid)

    ut = np.zeros(grid.n_interior)
    iterations = 0
    converged = False
    for _ in range(max_iter):
        nxt = lu.solve(lt * u - gain * np.clip(ut, -levels.u_min, levels.u_max))
        diff = dx_norm(grid, nxt - ut)
        ut = nxt
        iterations += 1
        # gain = 0 makes the map constant: the first solve is the fixed point
        if diff < tol or gain == 0.0:
            converged = True
            break

    residual = _residual_norm(problem, ut)
    result = ResolventSolution(State(grid, ut, problem.rhs.time), residual, iterations)
    if not converged and residual > tol:
        raise NoConvergence(
            f"no fixed point after {iterations} iterations "
            f"(residual {residual:.3e} > tol {tol:.3e})",
            result=result,
        )
    return result


def _residual_norm(problem: ResolventProblem, ut: np.ndarray) -> float:
    """dx-norm of (lt*I - L_h) u~ + gain*sat(u~) - lt*u."""
    grid = problem.rhs.grid
    lh = generator(grid)
    lv = problem.levels
    defect = (
        problem.lambda_tilde * ut
        - lh.apply_array(ut)
        + problem.gain * np.clip(ut, -lv.u_min, lv.u_max)
        - problem.lambda_tilde * problem.rhs.values
    )
    return dx_norm(grid, defect)


def apriori_bound_check(
    problem: ResolventProblem,
    sol: ResolventSolution,
    eps1: float,
    eps2: float,
) -> tuple[float, float, float]:
    """Evaluate the a-priori L^2 bound on the resolvent solution.

    With alpha = lt - gain/eps1 - lt/eps2 > 0 (Young-inequality margin),
    returns (lhs, rhs, alpha) where

        lhs = ||u~||^2,
        rhs = gain*eps1*L*u0^2 / alpha + (lt*eps2/alpha) * ||u||^2,

    u0 being the larger saturation level.  The caller asserts lhs <= rhs.
    """
    lt, gain = problem.lambda_tilde, problem.gain
    alpha = lt - gain / eps1 - lt / eps2
    if alpha <= 0:
        raise AlphaNotPositive(
            f"alpha = {alpha:g} <= 0 for eps1={eps1}, eps2={eps2}; pick epsilons "
            "with lt - gain/eps1 - lt/eps2 > 0"
        )
    grid = problem.rhs.grid
    u0 = max(problem.levels.u_min, problem.levels.u_max)
    lhs = dx_norm(grid, sol.solution.values) ** 2
    rhs = (gain * eps1 * grid.length * u0**2) / alpha + (
        lt * eps2 / alpha
    ) * dx_norm(grid, problem.rhs.values) ** 2
    return lhs, rhs, alpha
