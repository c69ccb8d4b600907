"""Exception hierarchy shared by all modules."""


class TodaError(Exception):
    """Base class for every error raised by the package."""


class DimensionMismatch(TodaError, ValueError):
    pass


class NonPositiveOffDiagonal(TodaError, ValueError):
    pass


class BadOrder(TodaError, ValueError):
    pass


class HamiltonianOverflow(TodaError, FloatingPointError):
    pass


class NonFiniteState(TodaError, FloatingPointError):
    pass


class SingularGroupElement(TodaError, ValueError):
    pass


class InvalidGroupElement(TodaError, ValueError):
    pass


class NonConvergentQuadrature(TodaError, ArithmeticError):
    pass


class GridTooCoarse(TodaError, ValueError):
    pass


class ConvergenceFailure(TodaError, ArithmeticError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class IndexOutOfRange(TodaError, IndexError):
    pass


class TrivializationVanishes(TodaError, ZeroDivisionError):
    pass


class WitnessNotFound(TodaError, RuntimeError):
    pass


class TraceMismatch(TodaError, ValueError):
    pass
