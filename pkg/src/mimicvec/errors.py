"""Exception types shared across the package."""


class MimicvecError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(MimicvecError):
    """Tensor shapes are incompatible for the requested operation."""


class ConfigError(MimicvecError):
    """A configuration value is out of its allowed range."""


class InputError(MimicvecError):
    """Caller-supplied data violates an operation's precondition."""


class ParseError(MimicvecError):
    """A file could not be parsed.

    Carries the offending line number when one is known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class TrainingError(MimicvecError):
    """Training aborted, e.g. because the loss became non-finite."""
