"""Exception hierarchy shared by all bellsim modules."""


class BellSimError(Exception):
    """Base class for every error raised by bellsim."""


class InvalidInputError(BellSimError, ValueError):
    """An argument is out of its domain (non-finite angle, bad config, ...)."""


class InvalidStateError(InvalidInputError):
    """A two-qubit state is not normalized or has the wrong shape."""


class InvalidObservableError(InvalidInputError):
    """A matrix is not a Hermitian observable with eigenvalues +1 and -1."""


class DegenerateNormalizationError(BellSimError, ArithmeticError):
    """Normalization was requested for a table whose total is zero.

    For the source-modulated scenario this is exactly the excluded point
    alpha + beta = pi, where the source emits nothing.
    """


class DegenerateSamplingError(BellSimError, ArithmeticError):
    """Fixed-pairs sampling was requested with zero observable rate."""
