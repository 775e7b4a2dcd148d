"""Exception hierarchy shared by all modules."""


class GeometryError(Exception):
    """Base class for every error raised by this package."""

    code = "GeometryError"


class DegenerateInput(GeometryError):
    code = "DegenerateInput"


class SingularMap(GeometryError):
    code = "SingularMap"


class ZeroDirection(GeometryError):
    code = "ZeroDirection"


class DimensionMismatch(GeometryError):
    code = "DimensionMismatch"


class NoConvergence(GeometryError):
    code = "NoConvergence"


class ToleranceAmbiguity(GeometryError):
    code = "ToleranceAmbiguity"


class BudgetExhausted(GeometryError):
    """Alignment search ended above the requested residual threshold."""

    code = "BudgetExhausted"

    def __init__(self, message, best_q=None, residual=float("inf")):
        super().__init__(message)
        self.best_q = best_q
        self.residual = residual


class InteriorViolation(GeometryError):
    code = "InteriorViolation"


class ClassMismatch(GeometryError):
    code = "ClassMismatch"


class DegenerateBase(GeometryError):
    code = "DegenerateBase"


class ResampleExhausted(GeometryError):
    code = "ResampleExhausted"


class VerificationFailure(GeometryError):
    """A verification clause failed; ``clause`` names the first one."""

    code = "VerificationFailure"

    def __init__(self, clause, message, report=None):
        super().__init__(f"clause ({clause}) failed: {message}")
        self.clause = clause
        self.report = report


class ParseError(GeometryError):
    code = "ParseError"
