"""Exception hierarchy shared by all modules."""


class VarInertiaError(Exception):
    """Base class for all package errors."""


class InvalidInputError(VarInertiaError, ValueError):
    """Input samples are malformed (non-finite values, bad shapes)."""


class TooShortError(InvalidInputError):
    """Input is shorter than an operation requires."""


class AlignmentError(InvalidInputError):
    """Two series do not share time origin, step and length."""


class ParameterError(VarInertiaError, ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class AliasingError(ParameterError):
    """Sampling rate cannot represent the requested excitation."""


class OutOfValidityError(ParameterError):
    """An asymptotic series is evaluated outside its validity range."""


class DecompositionError(VarInertiaError):
    """The HVD could not track a single dominant component."""


class InsufficientExcitationError(VarInertiaError):
    """The data do not contain enough frequency variation to fit the stiffness."""


class DivergenceError(VarInertiaError, ArithmeticError):
    """A time integration left the overflow guard."""


class NoDataError(VarInertiaError):
    """No valid samples remain after masking."""


class ConfigError(VarInertiaError, ValueError):
    """Scenario or pipeline configuration is invalid."""

    def __init__(self, message, key=None, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.key = key
        self.line = line


class SchemaError(InvalidInputError):
    """A CSV file does not carry the expected header."""
