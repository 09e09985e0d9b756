"""Exception hierarchy shared by every module of the package."""


class DualNMFError(Exception):
    """Base class for all errors raised by dualnmf."""


class NonPositiveArgument(DualNMFError, ValueError):
    pass


class NonFiniteResult(DualNMFError, ArithmeticError):
    pass


class UnsupportedAlpha(DualNMFError, ValueError):
    pass


class DimensionMismatch(DualNMFError, ValueError):
    pass


class DegenerateFactor(DualNMFError, ArithmeticError):
    """A factor column (of W) or row (of H) has collapsed to the floor.

    The multiplicative update divides by that sum, so it is undefined.
    """


class InvalidConfig(DualNMFError, ValueError):
    pass


class ConstantMatrix(DualNMFError, ValueError):
    """R² is undefined because the grand-mean model already fits V."""


class AllRestartsFailed(DualNMFError, RuntimeError):
    def __init__(self, errors):
        self.errors = list(errors)
        detail = "; ".join(f"restart {i}: {e}" for i, e in self.errors)
        super().__init__(f"every restart failed ({detail})")


class ParseError(DualNMFError, ValueError):
    def __init__(self, message, row=None, column=None, token=None):
        self.row = row
        self.column = column
        self.token = token
        where = ""
        if row is not None:
            where = f" at row {row}" + (f", column {column}" if column is not None else "")
        if token is not None:
            where += f" (token {token!r})"
        super().__init__(message + where)


class NegativeEntry(ParseError):
    def __init__(self, row, column, token):
        super().__init__("negative entry", row=row, column=column, token=token)


class RaggedRows(ParseError):
    def __init__(self, row, expected, found):
        self.expected = expected
        self.found = found
        super().__init__(f"expected {expected} fields, found {found}", row=row)


class WriteFailure(DualNMFError, OSError):
    pass
