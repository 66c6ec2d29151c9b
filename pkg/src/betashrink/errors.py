"""Exception and warning types raised across the package."""


class BetaShrinkError(Exception):
    """Base class for all package errors."""


class DomainError(BetaShrinkError, ValueError):
    """Argument outside the domain of a special function or model quantity."""


class DataValidationError(BetaShrinkError, ValueError):
    """Input data violates a Dataset or RunConfig invariant."""


class MissingColumn(DataValidationError):
    pass


class NonNumericCell(DataValidationError):
    def __init__(self, row, column, value):
        self.row, self.column, self.value = row, column, value
        super().__init__(f"non-numeric cell at row {row}, column {column!r}: {value!r}")


class ResponseOutOfRange(DataValidationError):
    def __init__(self, rows):
        self.rows = list(rows)
        shown = ", ".join(str(r) for r in self.rows[:10])
        more = "" if len(self.rows) <= 10 else f" (+{len(self.rows) - 10} more)"
        super().__init__(f"response must lie strictly inside (0, 1); offending rows: {shown}{more}")


class ZeroVariance(DataValidationError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"zero-variance predictor column(s): {', '.join(self.columns)}")


class DegenerateGamma(BetaShrinkError, ValueError):
    """All canonical coefficients are zero, so a ridge selector is undefined."""


class DegenerateFit(BetaShrinkError, RuntimeError):
    """A distribution fit could not be carried out (e.g. constant sample)."""


class ConvergenceFailure(BetaShrinkError, RuntimeError):
    """Raised when no usable estimate exists (all replications or redraws failed)."""


class RedrawCapExceeded(ConvergenceFailure):
    pass


class BoundaryDraw(ConvergenceFailure):
    """Beta draws kept landing on 0 or 1 in floating point."""


class ConvergenceWarning(UserWarning):
    """An iterative fit stopped at its iteration cap; the best iterate is returned."""


class ZeroCurvatureWarning(UserWarning):
    """A coordinate had zero weighted curvature and was set to 0."""
