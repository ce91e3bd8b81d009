# handlers/vuln.py
from pathlib import Path
from typing import Annotated, Optional

import typer

from app_context import comparator, console
from config import settings
from handlers.common import (
    AlphaOpt,
    ConfigOpt,
    FarOpt,
    ManifestOpt,
    OutOpt,
    print_table,
    report_failures,
    require_manifest,
    run_config,
)
from protocol.manifest import parse_manifest
from storage.files import read_calibration, read_morph_jobs, read_score_table, write_calibration, write_json, write_score_table
from utils.errors import ConfigError, ItemFailure
from utils.helpers import alpha_tag
from utils.messages import get_text
from vulnerability.calibration import calibrate_vulnerability_threshold
from vulnerability.models import CalibrationResult, VulnerabilityReport
from vulnerability.report import build_vulnerability_report, split_by_alpha
from vulnerability.scoring import score_morphs

router = typer.Typer(help="Face recognition vulnerability to morphs.", no_args_is_help=True)

ProbeOpt = Annotated[Optional[list[int]], typer.Option("--probe-session", help="Probe session; repeat for several attempts.")]


def resolve_tau(tau: Optional[float], calibration: Optional[Path]) -> tuple[float, Optional[CalibrationResult]]:
    if tau is not None and calibration is not None:
        raise ConfigError("give either --tau or --calibration, not both")
    if calibration is not None:
        result = read_calibration(calibration)
        return result.tau, result
    if tau is None:
        raise ConfigError("a verification threshold is needed (--tau or --calibration)")
    return tau, None


def print_vulnerability(report: VulnerabilityReport) -> None:
    rows = [
        [alpha_tag(a), b.fmmpmr_percent, b.mmpmr_percent, b.morph_count, b.attempt_count]
        for a, b in sorted(report.per_alpha.items())
    ]
    rows.append(["all", report.fmmpmr_percent, report.mmpmr_percent,
                 report.metadata.get("morphs", 0), report.metadata.get("attempts", 0)])
    print_table(
        get_text("vuln_report_title", tau=repr(report.tau), comparator=report.comparator_label),
        ["alpha", "FMMPMR %", "MMPMR %", "morphs", "attempts"],
        rows,
    )


@router.command("calibrate")
def calibrate(
    out: OutOpt,
    manifest: ManifestOpt = None,
    config: ConfigOpt = None,
    far_target: FarOpt = None,
    probe_session: Annotated[int, typer.Option(help="Probe session of the impostor comparisons.")] = settings.PROBE_SESSION,
) -> None:
    """Verification threshold tau at --far-target from non-mated comparisons."""
    cfg = run_config(config, vuln_far_target=far_target)
    data = parse_manifest(require_manifest(cfg, manifest), check_files=True)
    failures: list[ItemFailure] = []
    result = calibrate_vulnerability_threshold(
        data, comparator, cfg.vuln_far_target, probe_session=probe_session, workers=cfg.workers, errors=failures
    )
    write_calibration(out, result)
    console.print(get_text("calibrate_done", tau=repr(result.tau), n=result.impostor_count, far=result.far_target))
    if result.sentinel:
        console.print(get_text("calibrate_sentinel"))
    report_failures(failures)


@router.command("score")
def score(
    out: OutOpt,
    jobs: Annotated[Path, typer.Option(help="Morph job file.")],
    manifest: ManifestOpt = None,
    config: ConfigOpt = None,
    probe_session: ProbeOpt = None,
) -> None:
    """Compare every morph with the probe images of its contributing subjects."""
    cfg = run_config(config, probe_sessions=tuple(probe_session) if probe_session else None)
    data = parse_manifest(require_manifest(cfg, manifest), check_files=True)
    failures: list[ItemFailure] = []
    table = score_morphs(read_morph_jobs(jobs), data, comparator, cfg.probe_sessions, workers=cfg.workers, errors=failures)
    write_score_table(out, table)
    console.print(get_text("vuln_scores_done", count=len(table), path=out))
    report_failures(failures)


@router.command("report")
def report(
    out: OutOpt,
    scores: Annotated[Path, typer.Option(help="Vulnerability score file.")],
    calibration: Annotated[Optional[Path], typer.Option(help="Calibration file holding tau.")] = None,
    tau: Annotated[Optional[float], typer.Option(help="Verification threshold.")] = None,
    config: ConfigOpt = None,
    alpha: AlphaOpt = None,
) -> None:
    """FMMPMR and MMPMR per alpha and pooled, written as JSON."""
    cfg = run_config(config, alphas=alpha)
    threshold, calib = resolve_tau(tau, calibration)
    table = read_score_table(scores)
    result = build_vulnerability_report(split_by_alpha(table), threshold, calib, expected_alphas=cfg.alphas)
    write_json(out, result.to_dict())
    print_vulnerability(result)
