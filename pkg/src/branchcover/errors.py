"""Exception types shared across the library."""


class BranchcoverError(Exception):
    """Base class for all library errors."""


class KindMismatchError(BranchcoverError):
    """Two geometric objects live on different surfaces."""


class DomainError(BranchcoverError):
    """An argument is outside the mathematical domain of the operation."""


class DegeneratePairError(BranchcoverError):
    """The Wronskian of a section pair vanishes identically."""


class CommonZeroError(BranchcoverError):
    """The two sections share a zero, so the pair defines no covering."""


class ConvergenceError(BranchcoverError):
    """An iterative solver failed to converge.

    Carries partial results in ``partial`` when available.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class IncompleteRootSetError(BranchcoverError):
    """Winding-number certification found fewer zeros than the degree demands."""


class InsufficientDataError(BranchcoverError):
    """Not enough usable data points for a statistical fit."""
