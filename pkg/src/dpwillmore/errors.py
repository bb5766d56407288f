"""Exception hierarchy shared by all modules."""


class DPWError(Exception):
    """Base class for every error raised by :mod:`dpwillmore`."""


class DomainError(DPWError, ValueError):
    """An argument lies outside the domain of an operation."""


class NumericError(DPWError, ArithmeticError):
    """A computation overflowed or lost all accuracy."""


class SingularLoop(NumericError):
    """A loop is not invertible at one of the unit-circle samples."""


class PoleError(DomainError):
    """Evaluation of a Laurent series with negative powers at zero."""


class BigCellViolation(NumericError):
    """The Birkhoff Toeplitz system is numerically singular."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class CellBoundary(NumericError):
    """Iwasawa splitting failed: the loop touches or leaves the open cell."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class NotInCell(NumericError):
    """A constant K^C element has no SO+(1,3)·S1 x SO(n)·S2 factorization."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class PotentialSyntaxError(DPWError, SyntaxError):
    """Malformed potential file; carries 1-based line and column."""

    def __init__(self, message, line=0, column=0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.msg_text = message
        self.line = line
        self.column = column


class NullConditionViolated(DomainError):
    """B^t I_{1,3} B does not vanish identically."""


class ValidationError(DomainError):
    """A potential or matrix violates a required block structure."""


class PoleEncountered(NumericError):
    """An integration path runs into a pole of the potential."""


class DegenerateLift(NumericError):
    """The light-cone lift has no usable time component."""


class BranchPoint(NumericError):
    """The immersion degenerates (|y_z| below threshold)."""
