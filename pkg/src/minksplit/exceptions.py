"""Exception types shared across the package."""


class MinksplitError(Exception):
    """Base class for package errors."""


class EmptyFiberError(MinksplitError):
    """The requested fiber (or Minkowski image point) is empty."""

    def __init__(self, message: str = "fiber is empty", distance: float | None = None):
        super().__init__(message)
        self.distance = distance


class ConvergenceError(MinksplitError):
    """An iterative solver hit its iteration cap without meeting tolerances."""
