"""Exception hierarchy shared by all modules."""


class QBounceError(Exception):
    """Base class for every error raised by the package."""


class DomainError(QBounceError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class AiryRangeError(QBounceError, ArithmeticError):
    """An Airy evaluation would overflow double precision."""

    def __init__(self, message, argument=None, index=None):
        super().__init__(message)
        self.argument = argument
        self.index = index


class ConfigurationError(QBounceError, ValueError):
    """Inconsistent numerical setup, e.g. a grid too small for the state."""


class ConfigParseError(ConfigurationError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CapacityError(QBounceError, MemoryError):
    """A grid would exceed the configured sample cap."""


class LeakageError(CapacityError):
    """Probability reached the grid boundary during propagation."""


class ConvergenceError(QBounceError, RuntimeError):
    """An iterative or truncation procedure did not reach its tolerance."""


class StepSizeError(ConvergenceError):
    """Finite-difference estimates disagree under step halving."""


class WindowError(ConvergenceError):
    """A likelihood maximum sits on the boundary of the search window."""


class DegenerateInputError(QBounceError, ValueError):
    """Input carries no probability mass."""
