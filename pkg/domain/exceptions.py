"""
Domain exceptions for Ladartrack
Contains all errors raised by the kinematic, fitting, shape and tracking core.
"""


class DomainError(Exception):
    """Base exception for all domain-related errors."""
    pass


class InvalidArgumentError(DomainError, ValueError):
    """Raised when an operation receives a non-finite or out-of-range argument."""
    pass


class FitFailureError(DomainError):
    """Raised when no RANSAC hypothesis reaches the minimum inlier fraction."""
    pass


class DegenerateFitError(DomainError):
    """Raised when a degenerate fit is used where a well-posed one is required."""
    pass


class ImmatureHistogramError(DomainError):
    """Raised when a dimension histogram has not accumulated enough weight."""
    pass


class TrackError(DomainError):
    """Raised when there are issues with track or hypothesis operations."""
    pass
