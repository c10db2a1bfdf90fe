"""Exception types raised across the package."""


class OfjdarError(Exception):
    """Base class for all package errors."""


class ConfigurationError(OfjdarError, ValueError):
    """Invalid parameters or configuration."""


class DegenerateInputError(OfjdarError, ValueError):
    """Input data that makes an operation undefined (zero range, zero mean, ...)."""


class DegenerateClassError(DegenerateInputError):
    """A fuzzy class has no membership mass in a domain."""

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class ContractViolation(OfjdarError, ValueError):
    """An argument does not satisfy a documented precondition."""


class ParseError(OfjdarError, ValueError):
    """Malformed dataset file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SolverError(OfjdarError, RuntimeError):
    """A numerical solve failed after regularization attempts."""


class FitError(SolverError):
    """A regressor could not be fitted."""
