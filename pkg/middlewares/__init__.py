"""Middlewares package."""

from middlewares.error_handling_middleware import ErrorHandlingMiddleware
from middlewares.logging_middleware import LoggingMiddleware

__all__ = ["ErrorHandlingMiddleware", "LoggingMiddleware"]
