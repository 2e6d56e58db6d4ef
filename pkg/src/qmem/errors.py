"""Exception types raised by the qmem numerical machinery."""


class QmemError(Exception):
    """Base class for all qmem errors."""


class ConfigError(QmemError):
    """A configuration file or parameter set failed validation.

    Carries ``field`` when the offending entry is known, so command-line
    diagnostics can point at it.
    """

    def __init__(self, message, field=None):
        super().__init__(message + (f" (field: {field})" if field else ""))
        self.field = field


class PoleHit(QmemError):
    """A lossless absorber denominator was evaluated at machine-epsilon distance."""


class UnwrapAmbiguity(QmemError):
    """Adjacent grid points differ in raw phase by >= pi; the grid is too coarse."""


class QuadratureNotConverged(QmemError):
    """Successive grid refinements still differ by more than the tolerance."""


class DegenerateDetunings(QmemError):
    """Two absorbers share the same complex detuning."""


class RootFindingStalled(QmemError):
    """The simultaneous root iteration did not reach the residual target."""


class BranchMatchingAmbiguous(QmemError):
    """Pole branches could not be matched uniquely between sweep slices."""

    def __init__(self, message, g=None):
        super().__init__(message)
        self.g = g


class NoTransitionInBracket(QmemError):
    """The distinct-line count does not change over the supplied bracket."""


class OutOfTable(QmemError):
    """Requested Bernoulli index exceeds the supported table."""


class DomainError(QmemError, ValueError):
    """Argument outside the mathematical domain of a special function."""


class AsymmetricConfig(QmemError):
    """An operation requiring a symmetric absorber set got an asymmetric one."""


class NotConverged(QmemError):
    """The optimizer plateaued above tolerance within its evaluation budget."""


class StepSizeUnderflow(QmemError):
    """The adaptive integrator collapsed its step size (stiff system)."""
