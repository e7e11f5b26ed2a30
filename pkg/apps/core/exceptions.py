"""
Error hierarchy shared by every app.

Management commands map these onto process exit codes:
- 2 usage error: InvalidArgumentError, ParameterError, UnsupportedDimensionError
- 3 parse error: ParseError
- 4 numeric failure: NumericFailureError, SingularMatrixError, DegenerateInputError
"""

from typing import Optional


class RVolMinError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(RVolMinError, ValueError):
    """An argument violates an operation's precondition."""


class ParameterError(RVolMinError, ValueError):
    """An experiment or solver parameter set cannot be honoured."""


class UnsupportedDimensionError(RVolMinError, ValueError):
    """The problem dimension is outside what an operation supports."""


class SingularMatrixError(RVolMinError, ArithmeticError):
    """A matrix that must be invertible is (numerically) singular."""


class NumericFailureError(RVolMinError, ArithmeticError):
    """An iterate or objective became non-finite."""


class DegenerateInputError(RVolMinError, ValueError):
    """Input geometry is lower-dimensional than required."""


class ParseError(RVolMinError, ValueError):
    """A data file could not be parsed; carries the failing position."""

    def __init__(self, message: str, path: str = '', line: Optional[int] = None,
                 column: Optional[int] = None):
        self.path = path
        self.line = line
        self.column = column
        location = path
        if line is not None:
            location += f":{line}"
            if column is not None:
                location += f":{column}"
        super().__init__(f"{location}: {message}" if location else message)
