# vulnerability/scoring.py
import logging
from typing import Optional, Sequence

from config import settings
from morphing.jobs import MorphRecord
from protocol.models import DatasetManifest, FaceComparator
from utils.errors import ItemFailure
from vulnerability.calibration import ComparisonJob, score_comparisons
from vulnerability.models import ScoreEntry, VulnerabilityScoreTable

log = logging.getLogger(__name__)


def _attempt_sessions(
    manifest: DatasetManifest, subject_ids: Sequence[str], probe_sessions: Sequence[int]
) -> list[list[int]]:
    """Per subject, the listed probe sessions it actually has, in list order."""
    return [[s for s in probe_sessions if manifest.get(sid).session(s) is not None] for sid in subject_ids]


def score_morphs(
    morphs: Sequence[MorphRecord],
    manifest: DatasetManifest,
    comparator: FaceComparator,
    probe_session: int | Sequence[int] = settings.PROBE_SESSION,
    workers: int = 1,
    errors: Optional[list[ItemFailure]] = None,
) -> VulnerabilityScoreTable:
    """
    Compare every morph with the probe images of its two contributing subjects.

    Attempt p pairs the p-th available probe of each subject; P is the smaller
    probe count. A morph with no complete attempt, or with any failed
    comparison, is left out and reported in `errors`.
    """
    sessions = [probe_session] if isinstance(probe_session, int) else list(probe_session)

    jobs: list[ComparisonJob] = []
    plan: list[tuple[MorphRecord, int]] = []
    for morph in morphs:
        subjects = (morph.pair.subject_a, morph.pair.subject_b)
        available = _attempt_sessions(manifest, subjects, sessions)
        attempts = min(len(a) for a in available)
        if attempts == 0:
            failure = ItemFailure(morph.morph_id, f"missing probe session(s) {sessions} for a contributing subject")
            log.warning("⚠️ Excluding morph %s: %s", failure.item_id, failure.reason)
            if errors is not None:
                errors.append(failure)
            continue
        if len({len(a) for a in available}) > 1:
            log.warning(
                "⚠️ %s: unequal probe counts %s, using P=%d and ignoring the surplus",
                morph.morph_id, [len(a) for a in available], attempts,
            )
        for p in range(attempts):
            for k, sid in enumerate(subjects):
                session = available[k][p]
                jobs.append((
                    f"{morph.morph_id}#p{p + 1}k{k + 1}",
                    morph.output_path,
                    manifest.image_file(sid, session),
                ))
        plan.append((morph, attempts))

    failed: list[ItemFailure] = []
    scores = score_comparisons(jobs, comparator, workers, failed, desc="vulnerability")

    entries: list[ScoreEntry] = []
    cursor = 0
    for morph, attempts in plan:
        count = attempts * 2
        chunk = scores[cursor:cursor + count]
        cursor += count
        if any(s is None for s in chunk):
            reason = "; ".join(f.reason for f in failed if f.item_id.startswith(morph.morph_id + "#"))
            failure = ItemFailure(morph.morph_id, reason or "comparison failed")
            log.warning("⚠️ Excluding morph %s: %s", failure.item_id, failure.reason)
            if errors is not None:
                errors.append(failure)
            continue
        for i, score in enumerate(chunk):
            entries.append(ScoreEntry(morph.morph_id, i // 2 + 1, i % 2 + 1, float(score)))

    table = VulnerabilityScoreTable(tuple(entries), k=2)
    log.info("📊 Scored %d morphs (%d entries)", len(plan), len(entries))
    return table
