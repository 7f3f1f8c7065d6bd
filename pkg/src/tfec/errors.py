"""Exception types shared across the package."""


class TfecError(Exception):
    """Base class for all package errors."""


class ParseError(TfecError):
    """Malformed corpus file. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedCorpus(TfecError):
    """Structurally valid corpus that this pipeline does not handle."""


class ConfigError(TfecError):
    """Invalid configuration value or combination."""


class ShapeError(TfecError):
    """Array shape mismatch between operands."""


class NumericError(TfecError):
    """Non-finite values or numerically invalid state."""
