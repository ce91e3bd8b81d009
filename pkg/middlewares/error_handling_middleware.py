# middlewares/error_handling_middleware.py
import functools
import logging
from typing import Any, Callable

import click
import typer

from app_context import err_console
from utils.errors import MorphAgeError
from utils.messages import get_text

logger = logging.getLogger(__name__)


class ErrorHandlingMiddleware:
    """
    Maps failures of a command to exit codes: toolkit errors print a one-line
    diagnostic and exit 1, anything unexpected is logged with its traceback
    and exits 1. Usage errors and explicit exits stay with click.
    """

    def __call__(self, handler: Callable[..., Any]) -> Callable[..., Any]:
        @functools.wraps(handler)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            try:
                return handler(*args, **kwargs)
            except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
                raise
            except MorphAgeError as e:
                logger.debug("Command %s failed", handler.__name__, exc_info=True)
                err_console.print(get_text("error_contract", error=e), markup=False)
                raise typer.Exit(code=1) from e
            except OSError as e:
                logger.debug("Command %s hit an I/O error", handler.__name__, exc_info=True)
                err_console.print(get_text("error_contract", error=e), markup=False)
                raise typer.Exit(code=1) from e
            except Exception as e:
                logger.exception("Unhandled exception in command %s", handler.__name__)
                err_console.print(get_text("error_unexpected", error=e), markup=False)
                raise typer.Exit(code=1) from e

        return wrapper
