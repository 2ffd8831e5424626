"""Exception hierarchy shared across the package."""


class TheoryGenError(Exception):
    """Base class for all package errors."""


class UnitParseError(TheoryGenError, ValueError):
    pass


class DuplicateName(TheoryGenError, ValueError):
    pass


class BadDerivativeMeta(TheoryGenError, ValueError):
    pass


class NonDimensionlessTheta(TheoryGenError, ValueError):
    pass


class InvalidSymbol(TheoryGenError, ValueError):
    pass


class NotADerivative(TheoryGenError, ValueError):
    pass


class ContextMismatch(TheoryGenError, ValueError):
    """Two polynomials built over different symbol tables were combined."""


class MissingAssignment(TheoryGenError, KeyError):
    pass


class OrderMismatch(TheoryGenError, ValueError):
    pass


class OrderInconsistentWithMeasuredSet(TheoryGenError, ValueError):
    pass


class BudgetExceeded(TheoryGenError, RuntimeError):
    """A computation ran past its configured work budget."""


class ExhaustedAttempts(TheoryGenError, RuntimeError):
    """A rejection-sampling loop ran out of attempts."""


class Inconsistent(TheoryGenError):
    """The axioms generate the unit ideal."""


class InconsistentSystem(Inconsistent):
    pass


class Rejected(TheoryGenError):
    """No acceptable consequence was found within the attempt budget."""


class NoRealSolutionInRegion(TheoryGenError):
    pass


class DegenerateLeadingCoefficient(TheoryGenError, ValueError):
    pass


class StepSizeUnderflow(TheoryGenError, ArithmeticError):
    pass


class ParseError(TheoryGenError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class MissingFile(TheoryGenError, FileNotFoundError):
    pass


class IoFailure(TheoryGenError, OSError):
    pass


class ConfigError(TheoryGenError, ValueError):
    pass
