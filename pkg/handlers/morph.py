# handlers/morph.py
from pathlib import Path
from typing import Annotated

import typer

from app_context import console, runtime
from handlers.common import AlphaOpt, ConfigOpt, ManifestOpt, OutOpt, report_failures, require_manifest, run_config
from morphing.jobs import build_morph_jobs, generate_morphs
from protocol.manifest import parse_manifest
from storage.files import read_pairs, write_morph_jobs
from utils.errors import ItemFailure
from utils.messages import get_text

router = typer.Typer(help="Morph generation.", no_args_is_help=True)


@router.command("generate")
def generate(
    out: OutOpt,
    pairs: Annotated[Path, typer.Option(help="Pair file.")],
    manifest: ManifestOpt = None,
    config: ConfigOpt = None,
    alpha: AlphaOpt = None,
) -> None:
    """Render one morph per pair and alpha into --out and write --out/jobs.txt."""
    cfg = run_config(config, alphas=alpha)
    data = parse_manifest(require_manifest(cfg, manifest), check_files=True)
    jobs = build_morph_jobs(read_pairs(pairs), cfg.alphas, out)
    failures: list[ItemFailure] = []
    done = generate_morphs(jobs, data, workers=cfg.workers, errors=failures, progress=runtime.progress)
    write_morph_jobs(out / "jobs.txt", done)
    console.print(get_text("morphs_done", count=len(done), path=out))
    report_failures(failures)
