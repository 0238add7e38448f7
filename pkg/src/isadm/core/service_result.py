"""
Result envelope returned by every isadm service.

Carries what the CLI needs to finish a command: the exit code, a stable
error code for failures, and the warnings collected while the service ran.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Generic, List, Optional, Sequence, TypeVar

from .exceptions import IsadmError

T = TypeVar('T')


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class ServiceResult(Generic[T]):
    """
    Outcome of a service call.

    Attributes:
        success: Whether the operation succeeded
        message: One-line summary for the CLI
        data: Payload (service specific)
        code: Process exit code (0 on success)
        error_code: Stable machine-readable code of the failure, if any
        warnings: Warning messages raised during the call, in order
        duration_ms: Wall time, filled in by ``log_service_call``
        timestamp: UTC completion time
    """
    success: bool
    message: str = ""
    data: Optional[T] = None
    code: int = 0
    error_code: Optional[str] = None
    warnings: List[str] = field(default_factory=list)
    duration_ms: float = 0.0
    timestamp: str = field(default_factory=_utc_now)

    @classmethod
    def ok(
        cls,
        data: Optional[T] = None,
        message: str = "",
        warnings: Sequence[str] = (),
    ) -> ServiceResult[T]:
        return cls(success=True, message=message, data=data, warnings=list(warnings))

    @classmethod
    def error(
        cls,
        message: str,
        code: int = 1,
        data: Optional[T] = None,
        error_code: Optional[str] = None,
        warnings: Sequence[str] = (),
    ) -> ServiceResult[T]:
        if code == 0:
            raise ValueError("error results need a non-zero exit code")
        return cls(
            success=False,
            message=message,
            data=data,
            code=code,
            error_code=error_code,
            warnings=list(warnings),
        )

    @classmethod
    def from_exception(cls, exc: IsadmError) -> ServiceResult[T]:
        """Failure result with the exception's exit code and error code."""
        return cls.error(message=str(exc), code=exc.exit_code, error_code=exc.code)
