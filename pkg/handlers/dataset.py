# handlers/dataset.py
import logging
from pathlib import Path
from typing import Annotated, Optional

import typer

from app_context import console
from config import settings
from handlers.common import ConfigOpt, ManifestOpt, OutOpt, SeedOpt, print_table, require_manifest, run_config
from protocol.manifest import parse_manifest
from protocol.models import PARTITIONS
from protocol.splits import split_dataset
from protocol.stats import dataset_statistics
from storage.files import read_morph_jobs, read_pairs, read_split, write_json, write_split
from utils.helpers import parse_number_list
from utils.messages import get_text
from utils.synthetic import write_synthetic_set

logger = logging.getLogger(__name__)

router = typer.Typer(help="Manifests, synthetic data, splits and statistics.", no_args_is_help=True)


@router.command("synth")
def synth(
    out: OutOpt,
    subjects: Annotated[int, typer.Option(min=3, help="Subjects in the main bin.")] = settings.SYNTH_SUBJECTS,
    cross_subjects: Annotated[int, typer.Option(min=0, help="Subjects in a second, disjoint bin (0: none).")] = 0,
    size: Annotated[int, typer.Option(min=64, help="Image side in pixels.")] = settings.SYNTH_IMAGE_SIZE,
    seed: SeedOpt = None,
) -> None:
    """Write the seeded synthetic face set plus a ready-to-run experiment.ini."""
    seed = settings.SEED if seed is None else seed
    config = write_synthetic_set(out, subjects, seed, cross_subjects or None, size)
    console.print(get_text("synth_done", path=out / "manifest.txt", subjects=subjects, bin="MorphAge-I"))
    if cross_subjects:
        console.print(get_text("synth_cross_done", path=out / "cross" / "manifest.txt", subjects=cross_subjects, bin="MorphAge-II"))
    logger.info("Experiment configuration: %s", config)


@router.command("split")
def split(
    out: OutOpt,
    manifest: ManifestOpt = None,
    config: ConfigOpt = None,
    seed: SeedOpt = None,
    ratios: Annotated[Optional[str], typer.Option(help="train,dev,test ratios, e.g. 0.5,0.25,0.25.")] = None,
    sizes: Annotated[Optional[str], typer.Option(help="Explicit train,dev,test counts.")] = None,
) -> None:
    """Seeded, subject-disjoint train/dev/test split."""
    cfg = run_config(config, seed=seed, ratios=ratios, split_sizes=tuple(int(v) for v in parse_number_list(sizes)) if sizes else None)
    data = parse_manifest(require_manifest(cfg, manifest), check_files=False)
    result = split_dataset(data, cfg.ratios, cfg.seed, cfg.split_sizes)
    write_split(out, result)
    train, dev, test = result.sizes
    console.print(get_text("split_done", path=out, train=train, dev=dev, test=test))


@router.command("stats")
def stats(
    split_file: Annotated[Path, typer.Option("--split", help="Split file.")],
    manifest: ManifestOpt = None,
    config: ConfigOpt = None,
    pairs: Annotated[Optional[Path], typer.Option(help="Pair file.")] = None,
    jobs: Annotated[Optional[Path], typer.Option(help="Morph job file.")] = None,
    out: Annotated[Optional[Path], typer.Option("--out", "-o", help="Write the statistics as JSON.")] = None,
) -> None:
    """Per-partition session, gender, pair and morph counts."""
    cfg = run_config(config)
    data = parse_manifest(require_manifest(cfg, manifest))
    split_data = read_split(split_file)
    pair_list = read_pairs(pairs) if pairs else None
    morph_counts = None
    if jobs:
        morph_counts = {p: 0 for p in PARTITIONS}
        for job in read_morph_jobs(jobs):
            morph_counts[job.pair.split] += 1
    result = dataset_statistics(data, split_data, pair_list, morph_counts)
    print_table(get_text("stats_title", bin=result.bin_label), ["", *PARTITIONS, "total"],
                [[name, *values] for name, values in result.rows()])
    if out:
        write_json(out, result.to_dict())
