"""Exception hierarchy.

Two families matter to callers: :class:`InputError` for malformed text
input and :class:`MathError` for violated mathematical preconditions.
The command line maps them to exit codes 2 and 3.
"""


class ConfHoloError(Exception):
    pass


class InputError(ConfHoloError):
    pass


class MathError(ConfHoloError):
    pass


# expression kernel
class ExprSyntaxError(InputError):
    def __init__(self, message: str, column: int, line: int | None = None):
        where = f"line {line}, column {column}" if line is not None else f"column {column}"
        super().__init__(f"{message} ({where})")
        self.message = message
        self.column = column
        self.line = line


class UnknownVariable(InputError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DivisionByZeroFn(MathError, ZeroDivisionError):
    """Division by a rational function that is identically zero."""


class PoleAtPoint(MathError, ZeroDivisionError):
    """A denominator vanishes at the evaluation point."""


# charts and points
class ChartSyntaxError(ExprSyntaxError):
    pass


class SymmetryConflict(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class MissingCoordinate(InputError):
    pass


class DegenerateMetricAtPoint(MathError):
    pass


# geometry
class SingularMetric(MathError):
    pass


class ZeroFactor(MathError):
    pass


class PreconditionFailed(MathError):
    pass


class UnsupportedDimension(MathError):
    pass


class SingularBaseMetric(MathError):
    pass


class UnsolvableOrder(MathError):
    pass


class SpanMismatch(MathError):
    pass
