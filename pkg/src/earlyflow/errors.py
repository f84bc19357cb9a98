"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition."""


class ArtifactError(RuntimeError):
    """Raised when a file artifact is missing, unreadable, or corrupt."""


class InternalError(RuntimeError):
    """Raised when an internal invariant is violated; indicates a bug."""
