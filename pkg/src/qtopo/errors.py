"""Exception types shared across the package."""


class QTopoError(Exception):
    """Base class for errors raised by qtopo."""


class NonUnitaryError(QTopoError):
    """Matrix fails the unitarity check."""


class GridMismatchError(QTopoError):
    """Two fields do not share the same sample grid."""


class GridTooCoarseError(QTopoError):
    """Grid has too few points for the requested stencil."""


class RootScanExhaustedError(QTopoError):
    """Root scan window grew past its cap without finding enough levels."""


class ToleranceFailureError(QTopoError):
    """A solver result failed its own acceptance check."""


class InsufficientDataError(QTopoError):
    """Not enough samples to run a trend test."""


class AmbiguousClassificationError(QTopoError):
    """More than one gluing pattern is consistent with the data."""


class NotCommutingError(QTopoError):
    """Generators expected to commute do not."""


class NotNormalError(QTopoError):
    """Generator fails the normality check."""


class DegenerateFitError(QTopoError):
    """Least-squares fit produced an unusable slope."""


class EigenvalueNotFoundError(QTopoError):
    """Requested outcome is not in the observable's spectrum."""


class UnnormalizedStateError(QTopoError):
    """State vector does not have unit norm."""


class LinearSolveFailureError(QTopoError):
    """Sparse linear solve failed or produced non-finite values."""
