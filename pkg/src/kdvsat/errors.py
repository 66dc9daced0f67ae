"""Exception taxonomy shared by all kdvsat modules."""
from __future__ import annotations


class KdvSatError(Exception):
    """Base class for all kdvsat errors."""


class NonPositiveLength(KdvSatError):
    """Domain length must be a positive real."""


class TooFewCells(KdvSatError):
    """Grids need at least 8 cells to carry the stencils."""


class SampleLengthMismatch(KdvSatError):
    """A sample-based profile does not match the grid's interior size."""


class DimensionMismatch(KdvSatError):
    """Operator/state dimensions disagree."""


class ConfigInvalid(KdvSatError):
    """Simulation configuration violates a validity constraint."""


class SingularMatrix(KdvSatError):
    """Banded LU factorization hit a zero pivot."""


class NonFiniteState(KdvSatError):
    """A nodal value became NaN or infinite.

    Attributes:
        time: time stamp at which the non-finite value was detected
              (None when unknown).
    """

    def __init__(self, message: str, time: float | None = None):
        super().__init__(message)
        self.time = time


class EmptyWindow(KdvSatError):
    """Decay-rate fit window contains fewer than two samples."""


class NonPositiveEnergyInWindow(KdvSatError):
    """Decay-rate fit window has fewer than two usable positive energies."""


class MaxLengthTooSmall(KdvSatError):
    """Critical-length enumeration needs max_length >= 2*pi."""


class TooLarge(KdvSatError):
    """Dense eigensolve guard: interior dimension exceeds the cap."""


class EigensolveFailure(KdvSatError):
    """The dense eigensolver did not converge."""


class NoConvergence(KdvSatError):
    """Fixed-point iteration hit max_iter with residual above tolerance.

    Attributes:
        result: partial ResolventSolution reached when iteration stopped
                (None when unavailable).
    """

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class AlphaNotPositive(KdvSatError):
    """The Young-inequality margin alpha = lt - a/eps1 - lt/eps2 must be > 0."""
