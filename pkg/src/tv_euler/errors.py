"""Exception hierarchy shared by all tv_euler modules."""


class TvEulerError(Exception):
    """Base class for every error raised by this package."""


class DomainError(TvEulerError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapacityError(TvEulerError, MemoryError):
    """A request would exceed the memory available to the process."""


class ConvergenceError(TvEulerError, RuntimeError):
    """An iterative procedure stopped before reaching its tolerance.

    Attributes
    ----------
    residual : float
        Last residual observed before giving up.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class ConfigError(TvEulerError, ValueError):
    """An experiment configuration is malformed or inconsistent."""


class VerificationError(TvEulerError, AssertionError):
    """A numerical check of an inequality or identity failed.

    Attributes
    ----------
    index : int or None
        Position of the first violation, when meaningful.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
