"""Exception hierarchy shared by every stage of the pipeline."""


class CovElmError(Exception):
    """Base class for all package errors."""


class InvalidInput(CovElmError, ValueError):
    pass


class NumericalFailure(CovElmError, ArithmeticError):
    pass


class DegenerateCurve(CovElmError, ValueError):
    """A one-vs-rest ROC has no positives or no negatives."""


class ParseError(CovElmError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IoError(CovElmError, OSError):
    pass


class VersionError(CovElmError):
    pass


class LayoutMismatch(CovElmError):
    """Feature layout digest differs from the one this build produces."""
