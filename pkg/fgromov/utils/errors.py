"""Custom error classes"""

from typing import Any, Dict, Optional


class AppException(Exception):
    """Base application exception"""

    def __init__(self, message: str, exit_code: int = 1, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class ValidationError(AppException):
    """Validation error"""

    def __init__(self, message: str):
        super().__init__(message, exit_code=2)


class SpecParseError(ValidationError):
    """Malformed group specification or matrix file"""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class NotFoundError(AppException):
    """Resource not found error"""

    def __init__(self, resource: str):
        super().__init__(f"{resource} not found", exit_code=2)


class BackendMismatchError(AppException):
    """Element does not belong to the backend it was handed to"""

    def __init__(self, backend: str, element: Any):
        super().__init__(f"element {element!r} is not a valid {backend} element", exit_code=3)


class ResourceLimitError(AppException):
    """A configured element or combinatorial cap was exceeded"""

    def __init__(self, what: str, limit: int, details: Optional[Dict[str, Any]] = None):
        super().__init__(f"{what} exceeded the configured cap of {limit}", exit_code=4, details=details)


class BudgetExhaustedError(AppException):
    """A search budget ran out before its stopping condition fired"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=4, details=details)


class PreconditionError(AppException):
    """Operation called outside its domain"""

    def __init__(self, message: str):
        super().__init__(message, exit_code=5)


class PigeonholeFailure(AppException):
    """No admissible scale or radius found in the scanned range"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=6, details=details)


class GoodScaleFailure(PigeonholeFailure):
    """Determinant profile grows too fast at every scale"""


class SlowGrowthFailure(PigeonholeFailure):
    """Conjugation orbit does not grow slowly enough to certify"""


class SupportEscapeError(AppException):
    """A function support or evaluation window left the working ball"""

    def __init__(self, message: str):
        super().__init__(message, exit_code=7)


class NumericalFailureError(AppException):
    """Floating point result outside its tolerance envelope"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=8, details=details)


class GrowthWitnessError(AppException):
    """Rounded eigenvector fell into a non-expanding subspace at every precision"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=8, details=details)


class InternalError(AppException):
    """Invariant that should be impossible to break was broken"""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, exit_code=70, details=details)


class KroneckerViolationError(InternalError):
    """No period and no expanding eigenvalue for a unimodular integer matrix"""
