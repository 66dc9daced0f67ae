"""Banded finite-difference realizations of d/dx, d3/dx3, and the linear
generator L_h = -(D1 + D3) under y(0) = y(L) = y'(L) = 0.

Stencils are second-order central differences on the interior nodes.
Ghost nodes are eliminated by an odd image about x = 0 (consistent with
y(0) = 0) and an even image about x = L (consistent with y'(L) = 0).
With these closures D1 is exactly antisymmetric and D3 is an
antisymmetric band plus a diagonal boost of +1/(2 dx^3) at the two rows
nearest the boundaries, so the generator's quadratic form is

    <L_h u, u> = -(u_1^2 + u_{N-1}^2) / (2 dx^2) <= 0

for every interior vector u, with the dx-weighted inner product.  The
u_1 term is the discrete image of the continuum boundary dissipation
-|y_x(0)|^2; the u_{N-1} term is a consistent O(dx^2) extra loss.  That
sign is what every stability experiment rests on, so it is fixed by
construction here (and property-tested) at the price of a low-order
truncation error confined to the row next to each boundary.

All discrete inner products are dx-weighted sums over interior nodes, so
they approximate their L^2(0, L) counterparts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs

from .core import Grid, State
from .errors import DimensionMismatch, SingularMatrix

MAX_BANDWIDTH = 2


def dx_inner(grid: Grid, u: np.ndarray, v: np.ndarray) -> float:
    """dx-weighted inner product over interior nodes."""
    return float(grid.dx * np.dot(u, v))


def dx_norm(grid: Grid, u: np.ndarray) -> float:
    """dx-weighted Euclidean norm, the discrete L^2(0, L) norm."""
    return math.sqrt(grid.dx) * float(np.linalg.norm(u))


@dataclass(frozen=True, eq=False)
class BandedOperator:
    """Square banded matrix acting on interior nodal vectors.

    Band storage follows the scipy.linalg.solve_banded layout:
    bands[upper_bandwidth + i - j, j] holds entry (i, j).
    """

    dim: int
    lower_bandwidth: int
    upper_bandwidth: int
    bands: np.ndarray

    def __post_init__(self):
        kl, ku = self.lower_bandwidth, self.upper_bandwidth
        if kl < 0 or ku < 0 or kl > MAX_BANDWIDTH or ku > MAX_BANDWIDTH:
            raise ValueError(f"bandwidths must lie in 0..{MAX_BANDWIDTH}, got ({kl}, {ku})")
        b = np.array(self.bands, dtype=float)
        if b.shape != (kl + ku + 1, self.dim):
            raise DimensionMismatch(
                f"band storage must have shape {(kl + ku + 1, self.dim)}, got {b.shape}"
            )
        if not np.all(np.isfinite(b)):
            raise ValueError("band storage holds non-finite coefficients")
        b.setflags(write=False)
        object.__setattr__(self, "bands", b)

    @classmethod
    def from_diagonals(cls, dim: int, diagonals: dict) -> "BandedOperator":
        """Build from a mapping offset -> scalar or array of length dim - |offset|."""
        kl = max((-k for k in diagonals if k < 0), default=0)
        ku = max((k for k in diagonals if k > 0), default=0)
        bands = np.zeros((kl + ku + 1, dim))
        for k, vals in diagonals.items():
            if k >= 0:
                bands[ku - k, k:] = vals
            else:
                bands[ku - k, : dim + k] = vals
        return cls(dim, kl, ku, bands)

    @classmethod
    def identity(cls, dim: int) -> "BandedOperator":
        return cls(dim, 0, 0, np.ones((1, dim)))

    def apply_array(self, y: np.ndarray) -> np.ndarray:
        """Matrix-vector product on a raw interior vector, O(dim)."""
        if y.shape != (self.dim,):
            raise DimensionMismatch(f"operator dim {self.dim} vs vector shape {y.shape}")
        ku = self.upper_bandwidth
        out = self.bands[ku] * y
        for k in range(1, ku + 1):
            out[:-k] += self.bands[ku - k, k:] * y[k:]
        for k in range(1, self.lower_bandwidth + 1):
            out[k:] += self.bands[ku + k, :-k] * y[:-k]
        return out

    def to_dense(self) -> np.ndarray:
        ku = self.upper_bandwidth
        dense = np.zeros((self.dim, self.dim))
        for k in range(-self.lower_bandwidth, ku + 1):
            if k >= 0:
                np.fill_diagonal(dense[:, k:], self.bands[ku - k, k:])
            else:
                np.fill_diagonal(dense[-k:, :], self.bands[ku - k, : self.dim + k])
        return dense

    def scaled(self, c: float) -> "BandedOperator":
        return BandedOperator(
            self.dim, self.lower_bandwidth, self.upper_bandwidth, c * self.bands
        )

    def plus_identity(self, sigma: float = 1.0) -> "BandedOperator":
        bands = self.bands.copy()
        bands[self.upper_bandwidth] += sigma
        return BandedOperator(self.dim, self.lower_bandwidth, self.upper_bandwidth, bands)

    def add(self, other: "BandedOperator") -> "BandedOperator":
        if self.dim != other.dim:
            raise DimensionMismatch(f"operator dims differ: {self.dim} vs {other.dim}")
        kl = max(self.lower_bandwidth, other.lower_bandwidth)
        ku = max(self.upper_bandwidth, other.upper_bandwidth)
        bands = np.zeros((kl + ku + 1, self.dim))
        for op in (self, other):
            off = ku - op.upper_bandwidth
            bands[off : off + op.bands.shape[0]] += op.bands
        return BandedOperator(self.dim, kl, ku, bands)

    def lu(self) -> "BandedLU":
        return BandedLU(self)


class BandedLU:
    """LU factorization of a BandedOperator (LAPACK gbtrf/gbtrs).

    Partial pivoting widens the fill by the lower bandwidth, which stays
    inside the extended band storage LAPACK requires.
    """

    def __init__(self, op: BandedOperator):
        kl, ku, n = op.lower_bandwidth, op.upper_bandwidth, op.dim
        ab = np.zeros((2 * kl + ku + 1, n))
        ab[kl:] = op.bands
        (gbtrf,) = get_lapack_funcs(("gbtrf",), (ab,))
        lu, ipiv, info = gbtrf(ab, kl, ku)
        if info < 0:
            raise ValueError(f"illegal argument {-info} passed to gbtrf")
        if info > 0:
            raise SingularMatrix(f"banded LU hit a zero pivot at index {info}")
        self._kl, self._ku, self.dim = kl, ku, n
        self._lu, self._ipiv = lu, ipiv
        (self._gbtrs,) = get_lapack_funcs(("gbtrs",), (lu,))

    def solve(self, b: np.ndarray) -> np.ndarray:
        if b.shape != (self.dim,):
            raise DimensionMismatch(f"factorization dim {self.dim} vs rhs shape {b.shape}")
        x, info = self._gbtrs(self._lu, self._kl, self._ku, b, self._ipiv)
        if info != 0:
            raise SingularMatrix(f"banded back-substitution failed (info={info})")
        return x


def first_derivative_matrix(grid: Grid) -> BandedOperator:
    """Central d/dx: (y_{i+1} - y_{i-1}) / (2 dx), boundary values zero.

    Exactly antisymmetric under the homogeneous Dirichlet closure.
    """
    c = 1.0 / (2.0 * grid.dx)
    return BandedOperator.from_diagonals(grid.n_interior, {-1: -c, 1: c})


def third_derivative_matrix(grid: Grid) -> BandedOperator:
    """Central d3/dx3: (-y_{i-2} + 2 y_{i-1} - 2 y_{i+1} + y_{i+2}) / (2 dx^3).

    The left ghost y_{-1} = -y_1 (odd image) and the right ghost
    y_{N+1} = y_{N-1} (even image) land as +1/(2 dx^3) diagonal boosts on
    the first and last rows, keeping the quadratic form of -D3
    nonpositive.
    """
    n = grid.n_interior
    c = 1.0 / (2.0 * grid.dx**3)
    diag = np.zeros(n)
    diag[0] = c
    diag[-1] = c
    return BandedOperator.from_diagonals(
        n, {-2: -c, -1: 2.0 * c, 0: diag, 1: -2.0 * c, 2: c}
    )


def generator(grid: Grid) -> BandedOperator:
    """L_h = -(D1 + D3), the discrete -w' - w''' with the shared closure."""
    return first_derivative_matrix(grid).add(third_derivative_matrix(grid)).scaled(-1.0)


def apply(op: BandedOperator, state: State) -> State:
    """Matrix-vector product on a state; the time stamp is preserved."""
    if op.dim != state.grid.n_interior:
        raise DimensionMismatch(
            f"operator dim {op.dim} vs state dim {state.grid.n_interior}"
        )
    return State(state.grid, op.apply_array(state.values), state.time)
