"""Exception hierarchy shared by every ghostmask module."""


class GhostMaskError(Exception):
    """Base class for all library errors."""


class ParameterError(GhostMaskError, ValueError):
    """A generation or solver parameter is outside its valid domain."""


class DimensionError(GhostMaskError, ValueError):
    """Array shapes are inconsistent or not divisible as required."""


class RangeError(GhostMaskError, IndexError):
    """A pattern window escapes a non-periodic master mask."""


class DegenerateInputError(GhostMaskError, ValueError):
    """Input carries no usable signal (all-zero patterns, zero variance)."""


class PreconditionError(GhostMaskError, ValueError):
    """An operation's documented precondition does not hold."""


class SizeError(GhostMaskError, MemoryError):
    """A dense linear-algebra request exceeds the configured size cap."""


class PairingError(GhostMaskError, ValueError):
    """Positive/negative pattern sets are not complementary pairs."""


class ConfigError(GhostMaskError, ValueError):
    """An experiment configuration file failed validation."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
