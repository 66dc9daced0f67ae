"""Grids, nodal states, initial profiles, and the saturation map.

Spatial convention: a uniform mesh x_i = i*dx on [0, length] with
homogeneous boundary values y_0 = y_N = 0, so a state stores only the
interior nodes i = 1..N-1.  All value types are frozen dataclasses over
read-only arrays and are safe to share between concurrent tasks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    NonFiniteState,
    NonPositiveLength,
    SampleLengthMismatch,
    TooFewCells,
)

MIN_CELLS = 8

PROFILE_KINDS = ("one_minus_cos", "sine_mode", "samples")


@dataclass(frozen=True)
class Grid:
    """Uniform mesh on [0, length] with n_cells cells of width dx."""

    length: float
    n_cells: int
    dx: float

    def __post_init__(self):
        if not (np.isfinite(self.length) and self.length > 0):
            raise NonPositiveLength(f"grid length must be positive, got {self.length}")
        if self.n_cells < MIN_CELLS:
            raise TooFewCells(
                f"grid needs at least {MIN_CELLS} cells, got {self.n_cells}"
            )
        if abs(self.dx * self.n_cells - self.length) > 1e-12 * self.length:
            raise ValueError("dx * n_cells does not reproduce the grid length")

    @property
    def n_interior(self) -> int:
        """Number of interior nodes (N - 1)."""
        return self.n_cells - 1

    def interior_nodes(self) -> np.ndarray:
        """Coordinates x_i = i*dx for i = 1..N-1."""
        return np.arange(1, self.n_cells) * self.dx


def make_grid(length: float, n_cells: int) -> Grid:
    """Build a uniform grid; dx = length / n_cells."""
    n_cells = int(n_cells)
    length = float(length)
    if not (np.isfinite(length) and length > 0):
        raise NonPositiveLength(f"grid length must be positive, got {length}")
    return Grid(length, n_cells, length / n_cells)


@dataclass(frozen=True)
class State:
    """Interior nodal values of the wave field at one time stamp.

    Boundary values are identically zero and never stored.  The value
    array is copied on construction and frozen (read-only).
    """

    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_interior,):
            raise DimensionMismatch(
                f"state needs {self.grid.n_interior} interior values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise NonFiniteState(
                f"state holds non-finite nodal values at t={self.time}", time=self.time
            )
        t = float(self.time)
        if not (np.isfinite(t) and t >= 0):
            raise ValueError(f"time stamp must be a finite non-negative real, got {t}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "time", t)

    @classmethod
    def zeros(cls, grid: Grid, time: float = 0.0) -> "State":
        return cls(grid, np.zeros(grid.n_interior), time)


@dataclass(frozen=True)
class SaturationLevels:
    """Clipping bounds of the actuator: output stays in [-u_min, u_max]."""

    u_min: float
    u_max: float

    def __post_init__(self):
        for name, v in (("u_min", self.u_min), ("u_max", self.u_max)):
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"saturation level {name} must be positive, got {v}")

    @classmethod
    def symmetric(cls, u0: float) -> "SaturationLevels":
        """Same level on both sides: u_min = u_max = u0."""
        return cls(float(u0), float(u0))


@dataclass(frozen=True)
class OpenLoop:
    """No feedback: the control term is identically zero."""


@dataclass(frozen=True)
class LinearFeedback:
    """Unconstrained distributed feedback f = gain * y."""

    gain: float

    def __post_init__(self):
        if not (np.isfinite(self.gain) and self.gain > 0):
            raise ValueError(f"feedback gain must be positive, got {self.gain}")


@dataclass(frozen=True)
class SaturatedFeedback:
    """Clipped distributed feedback f = gain * sat(y)."""

    gain: float
    levels: SaturationLevels

    def __post_init__(self):
        if not (np.isfinite(self.gain) and self.gain > 0):
            raise ValueError(f"feedback gain must be positive, got {self.gain}")


FeedbackLaw = Union[OpenLoop, LinearFeedback, SaturatedFeedback]


def sat(s, levels: SaturationLevels):
    """Saturation map: -u_min below the band, identity inside, u_max above.

    Accepts scalars or arrays; scalars come back as plain floats.
    """
    clipped = np.clip(s, -levels.u_min, levels.u_max)
    if np.ndim(s) == 0:
        return float(clipped)
    return clipped


def sat_state(state: State, levels: SaturationLevels) -> State:
    """Apply the saturation map nodewise; the time stamp is preserved."""
    return State(state.grid, np.clip(state.values, -levels.u_min, levels.u_max), state.time)


def init_profile(
    grid: Grid,
    kind: str,
    amplitude: float = 1.0,
    *,
    mode_number: int = 1,
    samples: Sequence[float] | np.ndarray | None = None,
) -> State:
    """Sample an initial profile on the interior nodes at t = 0.

    Kinds:
        "one_minus_cos": amplitude * (1 - cos(2*pi*x/length)); at
            length = 2*pi this is amplitude * (1 - cos(x)), the mode that
            the uncontrolled generator annihilates.
        "sine_mode": amplitude * sin(2*pi*mode_number*x/length).
        "samples": amplitude * samples (length must match the interior).
    """
    x = grid.interior_nodes()
    if kind == "one_minus_cos":
        vals = amplitude * (1.0 - np.cos(2.0 * np.pi * x / grid.length))
    elif kind == "sine_mode":
        if mode_number < 1:
            raise ValueError(f"mode_number must be >= 1, got {mode_number}")
        vals = amplitude * np.sin(2.0 * np.pi * mode_number * x / grid.length)
    elif kind == "samples":
        if samples is None:
            raise SampleLengthMismatch("samples profile requires a sample sequence")
        arr = np.asarray(samples, dtype=float)
        if arr.shape != (grid.n_interior,):
            raise SampleLengthMismatch(
                f"expected {grid.n_interior} samples, got shape {arr.shape}"
            )
        vals = amplitude * arr
    else:
        raise ValueError(f"unknown profile kind {kind!r}; choose from {PROFILE_KINDS}")
    return State(grid, vals, 0.0)
