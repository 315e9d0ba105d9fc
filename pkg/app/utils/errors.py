class MelnikovError(Exception):
    """Base class for every failure raised by the analysis engines."""


class InvalidInputError(MelnikovError, ValueError):
    """Raised when an argument or a definition field is out of its domain."""

    def __init__(self, message, field=None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class ConfigError(InvalidInputError):
    """Raised when a system definition or run configuration cannot be used."""


class BoundaryPointError(InvalidInputError):
    """Raised when a derivative is requested exactly on a zone boundary x = a_i."""


class PreconditionError(MelnikovError):
    """Raised when a formula's precondition fails at a sampled point."""

    def __init__(self, message, point=None):
        self.point = point
        if point is not None:
            message = f"{message} at (x, y) = ({point[0]:.6g}, {point[1]:.6g})"
        super().__init__(message)


class NumericalFailure(MelnikovError):
    """Raised when a numerical method does not reach its tolerance.

    The best available estimate and the achieved error are kept on the
    exception so callers can still report them.
    """

    def __init__(self, message, estimate=None, error=None):
        self.estimate = estimate
        self.error = error
        super().__init__(message)


class NoReturnError(NumericalFailure):
    """Raised when a trajectory does not come back to the section in time."""


class EscapeError(NoReturnError):
    """Raised when a trajectory leaves the guard radius before returning."""


class EventLocalizationError(NumericalFailure):
    """Raised when a zone crossing cannot be pinned down to the time tolerance."""
