# handlers/report.py
from pathlib import Path
from typing import Annotated, Optional

import typer

from app_context import console
from evaluation.iso import build_det_report
from handlers.common import ApcerOpt, ConfigOpt, OutOpt, run_config
from handlers.vuln import resolve_tau
from mad.thresholds import score_set
from reports.svg import build_scatter_report, emit_box_svg, emit_det_svg, emit_scatter_svg
from reports.workbook import export_results_workbook
from storage.files import read_json, read_score_set, read_score_table
from utils.errors import ContractError
from utils.helpers import alpha_tag
from utils.messages import get_text
from vulnerability.report import split_by_alpha

router = typer.Typer(help="Figures and result tables.", no_args_is_help=True)


def _named(entry: str) -> tuple[str, Path]:
    """'label=path' or a bare path labelled by its parent directory."""
    label, sep, path = entry.partition("=")
    if sep:
        return label, Path(path)
    p = Path(entry)
    return p.parent.name or p.stem, p


@router.command("det")
def det(
    out: OutOpt,
    scores: Annotated[list[str], typer.Option("--scores", help="MAD score file, optionally 'label=path'; repeat to overlay.")],
    apcer_targets: ApcerOpt = None,
    config: ConfigOpt = None,
) -> None:
    """DET curves of one or more MAD score files."""
    cfg = run_config(config, apcer_targets=apcer_targets)
    curves = {}
    for entry in scores:
        label, path = _named(entry)
        curves[label] = build_det_report(score_set(read_score_set(path)), cfg.apcer_targets, "direct")
    emit_det_svg(curves, out)
    console.print(get_text("svg_done", path=out))


@router.command("scatter")
def scatter(
    out: OutOpt,
    scores: Annotated[Path, typer.Option(help="Vulnerability score file.")],
    calibration: Annotated[Optional[Path], typer.Option(help="Calibration file holding tau.")] = None,
    tau: Annotated[Optional[float], typer.Option(help="Verification threshold.")] = None,
    alpha: Annotated[Optional[float], typer.Option("--alpha", help="Only morphs with this factor.")] = None,
    box: Annotated[Optional[Path], typer.Option(help="Also write the S1/S2 box plot here.")] = None,
) -> None:
    """S1 vs S2 scatter with threshold lines and quadrant counts."""
    threshold, _ = resolve_tau(tau, calibration)
    table = read_score_table(scores)
    if alpha is not None:
        by_alpha = split_by_alpha(table)
        match = [t for a, t in by_alpha.items() if alpha_tag(a) == alpha_tag(alpha)]
        if not match:
            raise ContractError(f"no scores for alpha {alpha_tag(alpha)} in {scores}")
        table = match[0]
    if table.k != 2:
        raise ContractError(f"scatter plots need two contributing subjects, table has K={table.k}")
    title = f"alpha = {alpha_tag(alpha)}" if alpha is not None else ""
    points = [(s[0], s[1]) for s in table.attempts().values()]
    emit_scatter_svg(build_scatter_report(points, threshold, title), out)
    console.print(get_text("svg_done", path=out))
    if box:
        emit_box_svg({"S1": table.subject_scores(1), "S2": table.subject_scores(2)}, box, title)
        console.print(get_text("svg_done", path=box))


@router.command("table")
def table(
    out: OutOpt,
    results: Annotated[Path, typer.Option(help="results.json of an experiment run.")],
) -> None:
    """Results workbook (xlsx) from an experiment's results.json."""
    export_results_workbook(read_json(results), out)
    console.print(get_text("table_done", path=out))
