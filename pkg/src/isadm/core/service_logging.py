"""
Structured logging for isadm services.
"""
import functools
import logging
import time
from typing import Callable

from .exceptions import IsadmError
from .service_result import ServiceResult

logger = logging.getLogger("isadm.services")


def log_service_call(operation: str):
    """
    Wrap a service so it always returns a timed ``ServiceResult``.

    Known isadm errors become error results carrying their exit code;
    anything else is logged with a traceback and reported as exit code 1.

    Usage:
        @log_service_call("analyze")
        def analyze(config: RunConfig) -> ServiceResult[dict]:
            ...
    """
    def decorator(func: Callable[..., ServiceResult]) -> Callable[..., ServiceResult]:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> ServiceResult:
            start = time.perf_counter()
            logger.info(f"[{operation}] Starting...")

            try:
                result = func(*args, **kwargs)
            except IsadmError as e:
                result = ServiceResult.from_exception(e)
            except Exception as e:
                elapsed = (time.perf_counter() - start) * 1000
                logger.error(
                    f"[{operation}] Exception: {e} ({elapsed:.2f}ms)",
                    exc_info=True,
                    extra={"duration_ms": elapsed, "operation": operation, "exception": str(e)},
                )
                result = ServiceResult.error(message=f"Internal error: {e}", code=1)

            result.duration_ms = (time.perf_counter() - start) * 1000
            extra = {"duration_ms": result.duration_ms, "operation": operation, "exit_code": result.code}

            if result.success:
                logger.info(f"[{operation}] Success ({result.duration_ms:.2f}ms)", extra=extra)
            elif result.error_code:
                logger.warning(
                    f"[{operation}] {result.error_code}: {result.message} ({result.duration_ms:.2f}ms)",
                    extra={**extra, "error": result.message},
                )
            else:
                logger.warning(
                    f"[{operation}] Failed: {result.message} ({result.duration_ms:.2f}ms)",
                    extra={**extra, "error": result.message},
                )
            return result

        return wrapper
    return decorator
