from __future__ import annotations

from datetime import datetime, timezone
from typing import Any


def _now():
    return datetime.now(timezone.utc).isoformat()


class ContourError(Exception):
    """所有领域错误的基类；exit_code 直接作为 CLI 退出码"""

    exit_code: int = 1
    error_type: str = "contour_error"

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details


class UsageError(ContourError):
    exit_code = 2
    error_type = "usage_error"


class SchemaMismatchError(UsageError):
    error_type = "schema_mismatch"


class ParameterError(ContourError):
    error_type = "parameter_error"


class ConditionalModelError(ContourError):
    error_type = "conditional_model_error"


class InputError(ContourError):
    error_type = "input_error"


class DomainError(ContourError):
    error_type = "domain_error"


class DegenerateTailError(ContourError):
    error_type = "degenerate_tail"


class DivergentDensityError(ContourError):
    """β < 1 时密度在左端点 h = γ 处发散"""

    error_type = "divergent_density"


class InsufficientTailError(ContourError):
    exit_code = 3
    error_type = "insufficient_tail"

    def __init__(self, message: str, *, required_n: int, **details: Any) -> None:
        super().__init__(message, required_n=required_n, **details)
        self.required_n = required_n


class GeometryError(ContourError):
    exit_code = 4
    error_type = "geometry_error"


class VerificationFailedError(ContourError):
    exit_code = 5
    error_type = "verification_failed"


def error_payload(exc: ContourError) -> dict[str, Any]:
    return {
        "success": False,
        "message": exc.message,
        "errorType": exc.error_type,
        "exitCode": exc.exit_code,
        "details": exc.details,
        "timestamp": _now(),
    }
