"""
Logging middleware for all commands.
"""

import functools
import logging
import time
from typing import Any, Callable

logger = logging.getLogger(__name__)


class LoggingMiddleware:
    """Logs every command invocation with its parameters and wall time."""

    def __call__(self, handler: Callable[..., Any]) -> Callable[..., Any]:
        @functools.wraps(handler)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            params = ", ".join(f"{k}={v}" for k, v in kwargs.items() if v is not None)
            logger.info("▶️ %s | %s", handler.__name__, params[:200])
            started = time.perf_counter()
            try:
                return handler(*args, **kwargs)
            finally:
                logger.info("⏱️ %s finished in %.2fs", handler.__name__, time.perf_counter() - started)

        return wrapper
