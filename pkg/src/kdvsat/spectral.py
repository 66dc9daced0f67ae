"""Critical-length enumeration and eigen-analysis of the discrete generator.

On domains of length 2*pi*sqrt((k^2 + k*l + l^2) / 3), k, l positive
integers, the uncontrolled equation has modes whose energy never decays;
the smallest is L = 2*pi with the profile 1 - cos(x).  The discrete
generator reproduces this as a near-zero eigenvalue whose eigenvector
tracks that profile, while off the critical set the smallest eigenvalue
magnitude stays bounded away from zero under refinement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Grid
from .discretization import dx_norm, generator
from .errors import EigensolveFailure, MaxLengthTooSmall, TooLarge

TWO_PI = 2.0 * math.pi
DEDUP_RTOL = 1e-12
MAX_EIG_DIM = 2048


def _length_of_pair(k: int, l: int) -> float:
    return TWO_PI * math.sqrt((k * k + k * l + l * l) / 3.0)


@dataclass(frozen=True)
class CriticalLength:
    """One member of the critical set, canonical ordering k <= l."""

    k: int
    l: int
    length: float

    def __post_init__(self):
        if not (1 <= self.k <= self.l):
            raise ValueError(f"need 1 <= k <= l, got ({self.k}, {self.l})")

    @classmethod
    def from_pair(cls, k: int, l: int) -> "CriticalLength":
        return cls(k, l, _length_of_pair(k, l))


def critical_lengths(max_length: float) -> list[CriticalLength]:
    """All critical lengths <= max_length, sorted, deduplicated by value.

    Pairs are canonicalized to k <= l; distinct pairs that share a length
    (within 1e-12 relative) keep the lexicographically smallest (k, l).
    """
    if max_length < TWO_PI:
        raise MaxLengthTooSmall(
            f"critical lengths start at 2*pi ~ {TWO_PI:.6f}, got max_length={max_length}"
        )
    found = []
    k = 1
    while _length_of_pair(k, k) <= max_length:
        l = k
        while True:
            length = _length_of_pair(k, l)
            if length > max_length:
                break
            found.append(CriticalLength(k, l, length))
            l += 1
        k += 1
    found.sort(key=lambda cl: (cl.length, cl.k, cl.l))
    out: list[CriticalLength] = []
    for cl in found:
        if out and abs(cl.length - out[-1].length) <= DEDUP_RTOL * out[-1].length:
            continue
        out.append(cl)
    return out


def is_critical(length: float, tol: float):
    """Smallest (k, l) whose critical length is within tol, else None."""
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if length + tol < TWO_PI:
        return None
    matches = []
    k = 1
    while _length_of_pair(k, k) <= length + tol:
        l = k
        while True:
            cand = _length_of_pair(k, l)
            if cand > length + tol:
                break
            if abs(cand - length) <= tol:
                matches.append((k, l))
            l += 1
        k += 1
    return min(matches) if matches else None


@dataclass(frozen=True)
class SpectrumResult:
    """Dense spectrum of the discrete generator.

    eigenvalues are sorted by magnitude; leading_mode is the (real,
    unit dx-norm) eigenvector of the smallest-magnitude eigenvalue.
    """

    eigenvalues: np.ndarray
    leading_mode: np.ndarray
    dx: float
    length: float

    def __post_init__(self):
        for name in ("eigenvalues", "leading_mode"):
            arr = getattr(self, name)
            arr = np.array(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def spectrum(grid: Grid) -> SpectrumResult:
    """Eigenvalues and leading mode of the dense expansion of L_h.

    Desk-scale only: the interior dimension is capped at 2048.
    """
    n = grid.n_interior
    if n > MAX_EIG_DIM:
        raise TooLarge(f"interior dimension {n} exceeds the eigensolve cap {MAX_EIG_DIM}")
    dense = generator(grid).to_dense()
    try:
        eigvals, eigvecs = np.linalg.eig(dense)
    except np.linalg.LinAlgError as exc:
        raise EigensolveFailure(str(exc)) from exc

    order = np.lexsort((eigvals.imag, eigvals.real, np.abs(eigvals)))
    eigvals = eigvals[order]
    lead = eigvecs[:, order[0]]

    # deterministic real representative: rotate the largest entry onto the
    # positive real axis, then drop the (tiny) imaginary residue
    pivot = np.argmax(np.abs(lead))
    lead = np.real(lead * np.exp(-1j * np.angle(lead[pivot])))
    lead = lead / dx_norm(grid, lead)
    return SpectrumResult(eigvals, lead, grid.dx, grid.length)
