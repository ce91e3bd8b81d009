# handlers/pairs.py
import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from app_context import comparator, console
from handlers.common import ConfigOpt, FarOpt, ManifestOpt, OutOpt, report_failures, require_manifest, run_config
from protocol.manifest import parse_manifest
from protocol.pairing import calibrate_pairing_threshold, select_pairs
from storage.files import read_split, write_calibration, write_pairs
from utils.errors import ItemFailure
from utils.messages import get_text

logger = logging.getLogger(__name__)

router = typer.Typer(help="Morph pair selection.", no_args_is_help=True)


@router.command("select")
def select(
    out: OutOpt,
    split_file: Annotated[Path, typer.Option("--split", help="Split file.")],
    manifest: ManifestOpt = None,
    config: ConfigOpt = None,
    far_target: FarOpt = None,
    threshold: Annotated[Optional[float], typer.Option(help="Use this pairing threshold instead of calibrating.")] = None,
    max_pairs: Annotated[Optional[int], typer.Option(min=1, help="Pairs per subject at most.")] = None,
) -> None:
    """
    Same-gender, same-partition pairs ranked by comparator score. Without
    --threshold the pairing threshold is calibrated on this manifest at
    --far-target and written next to the pair file.
    """
    cfg = run_config(config, pair_far_target=far_target, max_pairs_per_subject=max_pairs)
    data = parse_manifest(require_manifest(cfg, manifest), check_files=True)
    split = read_split(split_file)
    failures: list[ItemFailure] = []

    if threshold is None:
        calibration = calibrate_pairing_threshold(data, comparator, cfg.pair_far_target, workers=cfg.workers, errors=failures)
        write_calibration(out.with_name(out.stem + "_calibration.txt"), calibration)
        threshold = calibration.tau

    pairs = select_pairs(
        data, split, comparator, threshold, cfg.max_pairs_per_subject, workers=cfg.workers, errors=failures
    )
    write_pairs(out, pairs)
    console.print(get_text("pairs_done", count=len(pairs), path=out, tau=repr(threshold)))
    if not pairs:
        console.print(get_text("pairs_empty"))
    report_failures(failures)
