"""Exception hierarchy shared by the library and the command line tool."""


class CopsplineError(Exception):
    """Base class for all errors raised by copspline."""


class DomainError(CopsplineError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class DimensionError(CopsplineError, ValueError):
    """Array shapes or dimension counts are incompatible."""


class ConfigurationError(CopsplineError, ValueError):
    """Inconsistent or incomplete configuration (missing marginals, bad grid...)."""


class ParseError(CopsplineError, ValueError):
    """A CSV or JSON input file could not be parsed."""


class EvaluationError(CopsplineError, ArithmeticError):
    """A density produced non-finite values during quadrature."""


class UnsupportedOperationError(CopsplineError, NotImplementedError):
    """The requested operation is not available for this copula family."""


class ConvergenceError(CopsplineError, RuntimeError):
    """The quadratic program solver did not certify an optimum.

    Parameters
    ----------
    message : str
        Human readable description.
    diagnostics : dict, optional
        Partial diagnostics gathered before the failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
