"""Exception hierarchy shared by every module of the package."""


class OUError(Exception):
    """Base class for all package errors."""


class ValidationError(OUError, ValueError):
    """A parameter object violates one of its invariants."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class NonPositiveSigma(ValidationError):
    pass


class NonPositiveHorizon(ValidationError):
    pass


class NonFiniteField(ValidationError):
    pass


class DegenerateQ(OUError, ArithmeticError):
    """The quadratic characteristic vanishes, so the MLE is undefined."""


class LambdaZero(OUError, ValueError):
    """An operation that divides by the mean-reversion speed received 0."""


class LambdaZeroUnsupportedExact(LambdaZero):
    pass


class NotUnitSigma(OUError, ValueError):
    """Transform code only accepts sigma == 1; rescale first."""


class NonzeroInitialValue(OUError, ValueError):
    pass


class OutsideConvergenceRegion(OUError, ArithmeticError):
    """A transform was evaluated where its defining expectation diverges."""


class ToleranceNotMet(OUError, ArithmeticError):
    def __init__(self, message: str, value=None, error=None):
        self.value = value
        self.error = error
        super().__init__(message)


class ContourDivergence(OUError, ArithmeticError):
    pass


class NotApplicable(OUError, ValueError):
    pass


class MalformedInput(OUError, ValueError):
    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
