"""Exception hierarchy shared across the package."""


class ApproxLstmError(Exception):
    """Base class for every error raised by approxlstm."""


class InputError(ApproxLstmError, ValueError):
    """Caller supplied invalid data (bad file, empty set, missing entry)."""


class ShapeError(InputError):
    pass


class ConfigError(InputError):
    pass


class RangeError(InputError, IndexError):
    pass


class ScaleError(InputError):
    """Input too large for a test-scale routine."""


class NumericError(ApproxLstmError, ArithmeticError):
    """A numeric routine could not produce a valid result."""


class ZeroMatrixError(NumericError):
    pass


class ConvergenceError(NumericError):
    """Power iteration ran out of iterations.

    The last iterate is kept on ``last`` so callers can inspect or accept it.
    """

    def __init__(self, message, last=None, iterations=0):
        super().__init__(message)
        self.last = last
        self.iterations = iterations


class ContainerError(InputError):
    """Base for binary container failures."""


class FormatError(ContainerError):
    pass


class TruncationError(ContainerError):
    pass


class NonFiniteError(ContainerError):
    pass
