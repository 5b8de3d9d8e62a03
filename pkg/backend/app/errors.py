from typing import Optional


class SolverError(Exception):
    """Base class for every error raised by the solver package."""


class DomainError(SolverError, ValueError):
    """A query point or kernel argument violates its domain precondition."""


class SingularityError(DomainError):
    """A kernel was evaluated at its singular point."""


class InsufficientDataError(SolverError):
    """Pair statistics hold fewer than two samples."""


class InvariantViolation(SolverError, AssertionError):
    """Combined weights failed normalization or convexity."""


class ConfigError(SolverError, ValueError):
    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class SceneError(ConfigError):
    """Scene assembly failed (missing mesh, degenerate slice, ...)."""
