"""
Exceptions shared by the engine apps.

Management commands map these onto exit codes: invalid input exits with 2,
numerical failures exit with 3.
"""


class BoundsEngineError(Exception):
    """Base class for every error raised by the engine"""


class InvalidInputError(BoundsEngineError, ValueError):
    """Raised when an input violates a documented precondition"""


class NumericalFailure(BoundsEngineError, ArithmeticError):
    """Raised on non-convergence, singular fits or a broken internal invariant"""
