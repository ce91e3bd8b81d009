# handlers/common.py
"""
Options and helpers shared by the command groups.
"""

from enum import Enum
from pathlib import Path
from typing import Annotated, Any, Optional

import typer
from rich.table import Table

from app_context import console, runtime
from config import RunConfig, load_run_config, split_ratios
from utils.errors import ConfigError, ItemFailure
from utils.helpers import parse_number_list
from utils.messages import get_text


class Extractor(str, Enum):
    lbp = "lbp"
    bsif = "bsif"
    hog = "hog"


class ExperimentMode(str, Enum):
    intra = "intra"
    cross = "cross"


class ThresholdMode(str, Enum):
    dev_calibrated = "dev_calibrated"
    direct = "direct"


ConfigOpt = Annotated[Optional[Path], typer.Option("--config", "-c", help="Run configuration file ([section] key = value).")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="Seed of every random choice.")]
AlphaOpt = Annotated[Optional[list[float]], typer.Option("--alpha", help="Morphing factor; repeat for several.")]
FarOpt = Annotated[Optional[float], typer.Option("--far-target", help="FAR target as a fraction, e.g. 0.001.")]
ApcerOpt = Annotated[Optional[str], typer.Option("--apcer-targets", help="Comma-separated APCER targets in percent.")]
ManifestOpt = Annotated[Optional[Path], typer.Option("--manifest", "-m", help="Dataset manifest.")]
OutOpt = Annotated[Path, typer.Option("--out", "-o", help="Output file or directory.")]


def run_config(config: Optional[Path], **overrides: Any) -> RunConfig:
    """Config file values, overridden by the flags that were given."""
    if config is not None and not config.is_file():
        raise ConfigError(f"config file not found: {config}")
    if "apcer_targets" in overrides and isinstance(overrides["apcer_targets"], str):
        overrides["apcer_targets"] = tuple(parse_number_list(overrides["apcer_targets"]))
    if "ratios" in overrides and isinstance(overrides["ratios"], str):
        overrides["ratios"] = split_ratios(overrides["ratios"])
    if "alphas" in overrides and overrides["alphas"] is not None:
        overrides["alphas"] = tuple(overrides["alphas"]) or None
    overrides.setdefault("workers", runtime.workers)
    return load_run_config(config, **overrides)


def require_manifest(cfg: RunConfig, manifest: Optional[Path]) -> Path:
    path = manifest or cfg.manifest
    if path is None:
        raise ConfigError("no manifest given (use --manifest or [paths] manifest in --config)")
    return path


def report_failures(failures: list[ItemFailure]) -> None:
    if failures:
        console.print(get_text("item_failures", count=len(failures)))


def print_table(title: str, header: list[str], rows: list[list[Any]]) -> None:
    table = Table(title=title, header_style="bold white on #2F5597")
    for i, name in enumerate(header):
        table.add_column(name, justify="left" if i == 0 else "right")
    for row in rows:
        table.add_row(*[f"{v:.2f}" if isinstance(v, float) else str(v) for v in row])
    console.print(table)
