import logging
from typing import Annotated, Optional

import typer

from app_context import runtime
from config import settings

# Routers
from handlers.dataset import router as dataset_router
from handlers.experiment import router as experiment_router
from handlers.mad import router as mad_router
from handlers.morph import router as morph_router
from handlers.pairs import router as pairs_router
from handlers.report import router as report_router
from handlers.vuln import router as vuln_router

# Middlewares
from middlewares import ErrorHandlingMiddleware, LoggingMiddleware

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

app = typer.Typer(
    name="morphage",
    help="Face morphing attacks: protocol, morph generation, vulnerability and detection.",
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)

ROUTERS: dict[str, typer.Typer] = {
    "dataset": dataset_router,
    "pairs": pairs_router,
    "morph": morph_router,
    "vuln": vuln_router,
    "mad": mad_router,
    "report": report_router,
    "experiment": experiment_router,
}

# Outermost last: logging sees the exit raised by the error middleware.
MIDDLEWARES = (ErrorHandlingMiddleware(), LoggingMiddleware())


def install_middlewares(group: typer.Typer) -> None:
    """Wrap every command callback of `group` and its subgroups."""
    for command in group.registered_commands:
        if command.callback is None or getattr(command.callback, "__wrapped_by_middleware__", False):
            continue
        callback = command.callback
        for middleware in MIDDLEWARES:
            callback = middleware(callback)
        callback.__wrapped_by_middleware__ = True
        command.callback = callback
    for sub in group.registered_groups:
        if sub.typer_instance is not None:
            install_middlewares(sub.typer_instance)


@app.callback()
def main_callback(
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging.")] = False,
    workers: Annotated[Optional[int], typer.Option(min=1, help="Worker threads (overrides the configuration).")] = None,
    progress: Annotated[bool, typer.Option("--progress/--no-progress", help="Progress bars.")] = True,
) -> None:
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT, force=True)
    runtime.verbose = verbose
    runtime.workers = workers
    runtime.progress = progress and settings.SHOW_PROGRESS


for name, router in ROUTERS.items():
    app.add_typer(router, name=name)
install_middlewares(app)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
