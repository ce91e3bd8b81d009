# vulnerability/calibration.py
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from config import settings
from protocol.models import DatasetManifest, FaceComparator
from utils.errors import ContractError, ItemFailure
from utils.task_pool import map_ordered
from vulnerability.models import CalibrationResult

log = logging.getLogger(__name__)

ComparisonJob = tuple[str, Path, Path]


def sentinel_step(max_score: float) -> float:
    return 1e-6 * max(1.0, abs(max_score))


def calibrate_threshold(impostor_scores: Sequence[float], far_target: float) -> CalibrationResult:
    """
    Smallest observed score tau with fraction(scores >= tau) <= far_target.

    When no observed value qualifies, tau is placed one small step above the
    maximum and the result is flagged as a sentinel.

    Raises:
        ContractError: empty scores or far_target outside (0, 1].
    """
    scores = np.sort(np.asarray(list(impostor_scores), dtype=np.float64))
    if scores.size == 0:
        raise ContractError("cannot calibrate a threshold on an empty score list")
    if not 0.0 < far_target <= 1.0:
        raise ContractError(f"far_target must lie in (0, 1], got {far_target}")
    if not np.all(np.isfinite(scores)):
        raise ContractError("impostor scores must be finite")

    n = scores.size
    candidates = np.unique(scores)
    at_or_above = n - np.searchsorted(scores, candidates, side="left")
    ok = np.flatnonzero(at_or_above / n <= far_target)
    if ok.size:
        return CalibrationResult(tau=float(candidates[ok[0]]), far_target=far_target, impostor_count=n)

    top = float(scores[-1])
    tau = top + sentinel_step(top)
    log.warning(
        "⚠️ No observed impostor score reaches FAR <= %s with n=%d; using sentinel tau=%r", far_target, n, tau
    )
    return CalibrationResult(tau=tau, far_target=far_target, impostor_count=n, sentinel=True)


def score_comparisons(
    jobs: Sequence[ComparisonJob],
    comparator: FaceComparator,
    workers: int = 1,
    errors: Optional[list[ItemFailure]] = None,
    desc: str = "comparisons",
) -> list[Optional[float]]:
    """
    Run (item_id, path_a, path_b) comparisons concurrently; results keep job
    order, failed items come back as None and are reported in `errors`.
    """

    def _run(job: ComparisonJob) -> tuple[Optional[float], Optional[ItemFailure]]:
        item_id, path_a, path_b = job
        try:
            return comparator.compare(path_a, path_b), None
        except (OSError, ContractError) as e:
            return None, ItemFailure(item_id, str(e))

    scores: list[Optional[float]] = []
    for score, failure in map_ordered(_run, jobs, workers=workers, desc=desc):
        if failure is not None:
            log.warning("⚠️ Comparator failed on %s: %s", failure.item_id, failure.reason)
            if errors is not None:
                errors.append(failure)
        scores.append(score)
    return scores


def collect_impostor_scores(
    manifest: DatasetManifest,
    comparator: FaceComparator,
    probe_session: int = settings.PROBE_SESSION,
    reference_session: int = settings.MORPH_SESSION,
    workers: int = 1,
    errors: Optional[list[ItemFailure]] = None,
) -> list[float]:
    """Probe of subject i against the reference of every subject j != i."""
    jobs: list[ComparisonJob] = []
    for probe in manifest.subjects:
        if probe.session(probe_session) is None:
            continue
        for ref in manifest.subjects:
            if ref.subject_id == probe.subject_id or ref.session(reference_session) is None:
                continue
            jobs.append((
                f"{probe.subject_id}@s{probe_session}~{ref.subject_id}@s{reference_session}",
                manifest.image_file(probe.subject_id, probe_session),
                manifest.image_file(ref.subject_id, reference_session),
            ))
    scores = score_comparisons(jobs, comparator, workers, errors, desc="impostors")
    return [s for s in scores if s is not None]


def calibrate_vulnerability_threshold(
    manifest: DatasetManifest,
    comparator: FaceComparator,
    far_target: float = settings.VULN_FAR_TARGET,
    probe_session: int = settings.PROBE_SESSION,
    reference_session: int = settings.MORPH_SESSION,
    workers: int = 1,
    errors: Optional[list[ItemFailure]] = None,
) -> CalibrationResult:
    scores = collect_impostor_scores(manifest, comparator, probe_session, reference_session, workers, errors)
    result = calibrate_threshold(scores, far_target)
    log.info("🎯 Verification threshold tau=%r from %d impostor scores (FAR %s)", result.tau, result.impostor_count, far_target)
    return result
