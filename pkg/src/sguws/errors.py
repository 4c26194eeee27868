"""Exception types shared across the package."""


class ParseError(ValueError):
    """Raised when textual input (polynomials, CSV rows, bit strings) is malformed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ResourceError(RuntimeError):
    """Raised when a request exceeds a configured size budget."""


class TrainingError(RuntimeError):
    """Raised when training diverges."""


class ModelFormatError(ValueError):
    """Raised when a saved model file cannot be loaded."""
