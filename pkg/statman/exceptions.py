"""Custom exception classes."""

from typing import Any, Dict, Iterable, Optional


class StatmanException(Exception):
    """Base exception for the application."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        """
        Initialize exception.

        Args:
            message: Error message
            details: Additional error details
        """
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class DomainError(StatmanException):
    """Exception raised when a field cannot be evaluated at a point."""

    pass


class OrderError(StatmanException):
    """Exception raised when a jet order above the supported maximum is requested."""

    pass


class VarianceError(StatmanException):
    """Exception raised when tensor slots have the wrong variance for an operation."""

    pass


class ShapeError(StatmanException):
    """Exception raised when tensors of different shape or variance are compared."""

    pass


class SingularMetric(StatmanException):
    """Exception raised when the metric is not invertible at a point."""

    pass


class DimensionError(StatmanException):
    """Exception raised for dimensions an operation does not support."""

    pass


class ParseError(StatmanException):
    """Exception raised when an expression or manifold file cannot be parsed."""

    def __init__(
        self,
        message: str,
        position: Optional[int] = None,
        expected: Optional[Iterable[str]] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        """
        Initialize parse error.

        Args:
            message: Error message
            position: Character offset of the offending token, if known
            expected: Tokens that would have been accepted at that position
            details: Additional error details
        """
        self.position = position
        self.expected = sorted(set(expected or ()))
        merged = dict(details or {})
        if position is not None:
            merged["position"] = position
        if self.expected:
            merged["expected"] = self.expected
        super().__init__(message, merged)


class ManifoldFileError(ParseError):
    """Exception raised when a manifold file violates its schema."""

    pass


class ParamError(StatmanException):
    """Exception raised for invalid model family parameters."""

    pass


class QuadratureError(StatmanException):
    """Exception raised when a quadrature rule fails to converge or normalize."""

    pass


class ConsistencyError(StatmanException):
    """Exception raised when equivalent formulations of a check disagree."""

    pass


class DegenerateFit(StatmanException):
    """Exception raised when a least-squares curvature fit has no support."""

    pass
