class RobustFusionError(Exception):
    """
    Base class of every error raised by the package.

    Attributes:
        exit_code (int): The process exit code the CLI uses for this error class.
    """

    exit_code = 7


class ParseError(RobustFusionError):
    """Raised when an instance file cannot be parsed."""

    exit_code = 3

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})" if line else message)
        self.line = line
        self.column = column


class ValidationError(RobustFusionError):
    """Raised when an instance violates a structural invariant."""

    exit_code = 4


class DimensionMismatchError(ValidationError):
    pass


class NonStochasticRowError(ValidationError):
    pass


class BadPriorError(ValidationError):
    pass


class StateMismatchError(ValidationError):
    pass


class NotBinaryStateError(ValidationError):
    pass


class EmptyInputError(ValidationError):
    pass


class InstanceTooLargeError(RobustFusionError):
    """Raised when a product signal space exceeds the configured cap."""

    exit_code = 5


class PowerOverflowError(InstanceTooLargeError):
    """Raised when an i.i.d. power experiment would exceed its signal cap."""


class NumericalFailureError(RobustFusionError):
    """Raised when the LP kernel cannot produce a trustworthy optimum."""

    exit_code = 6


class InconsistentSolutionError(NumericalFailureError):
    """Raised when two independent computations of the same quantity disagree."""


class TargetOutsidePolyhedronError(RobustFusionError):
    pass


class NoStrictLeaderError(RobustFusionError):
    pass
