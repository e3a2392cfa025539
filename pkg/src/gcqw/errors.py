"""Exception types raised by the simulator."""


class GCQWError(Exception):
    """Base class for all package errors."""


class DomainError(GCQWError, ValueError):
    """A parameter lies outside its mathematical domain."""


class DimensionError(GCQWError, ValueError):
    """State and configuration sizes disagree."""


class UnsupportedError(GCQWError, ValueError):
    """The operation is not defined for the given configuration."""


class LineSemanticsError(GCQWError, ValueError):
    """Cycle wraparound would corrupt a line-model observable."""


class ValidationError(GCQWError, RuntimeError):
    """A gated numerical check failed (norm drift, step doubling, ...)."""

    def __init__(self, check: str, message: str, **details):
        super().__init__(message)
        self.check = check
        self.details = details

    def as_dict(self) -> dict:
        return {"check": self.check, "message": str(self), **self.details}


class TruncationError(ValidationError):
    """Mode-lattice amplitude leaked to the truncation boundary."""
