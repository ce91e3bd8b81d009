from dataclasses import dataclass
from typing import Optional

from rich.console import Console

from config import settings
from vulnerability.comparator import HogComparator


@dataclass
class Runtime:
    """Process-wide switches set by the CLI callback."""

    # None: take the worker count from the run configuration
    workers: Optional[int] = None
    progress: bool = settings.SHOW_PROGRESS
    verbose: bool = False


console = Console(highlight=False)
err_console = Console(stderr=True, highlight=False)
comparator = HogComparator()
runtime = Runtime()
