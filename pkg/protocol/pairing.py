# protocol/pairing.py
import itertools
import logging
from collections import Counter
from typing import Optional

from config import settings
from protocol.models import PARTITIONS, DatasetManifest, FaceComparator, MorphPair, ProtocolSplit
from utils.errors import ContractError, ItemFailure
from vulnerability.calibration import ComparisonJob, calibrate_threshold, score_comparisons
from vulnerability.models import CalibrationResult

log = logging.getLogger(__name__)


def _pair_job(manifest: DatasetManifest, a: str, b: str, session: int) -> ComparisonJob:
    return (f"{a}+{b}", manifest.image_file(a, session), manifest.image_file(b, session))


def candidate_pairs(
    manifest: DatasetManifest, split: ProtocolSplit, session: int = settings.MORPH_SESSION
) -> list[tuple[str, str, str]]:
    """(a, b, partition) for every same-gender, same-partition pair with a < b."""
    out = []
    for partition in PARTITIONS:
        members = split.partition(partition)
        subjects = sorted(
            (s for s in manifest.subjects if s.subject_id in members and s.session(session) is not None),
            key=lambda s: s.subject_id,
        )
        for sa, sb in itertools.combinations(subjects, 2):
            if sa.gender == sb.gender:
                out.append((sa.subject_id, sb.subject_id, partition))
    return out


def select_pairs(
    manifest: DatasetManifest,
    split: ProtocolSplit,
    comparator: FaceComparator,
    pair_threshold: float,
    max_pairs_per_subject: int = settings.MAX_PAIRS_PER_SUBJECT,
    session: int = settings.MORPH_SESSION,
    workers: int = 1,
    errors: Optional[list[ItemFailure]] = None,
) -> list[MorphPair]:
    """
    Greedy morph-pair selection.

    Same-gender candidates inside each partition are scored on their session
    images, those at or above `pair_threshold` are ranked by descending score
    (ties by ids) and accepted while both subjects are under the cap.
    Comparator failures skip the pair and land in `errors`.

    Raises:
        ContractError: max_pairs_per_subject < 1.
    """
    if max_pairs_per_subject < 1:
        raise ContractError(f"max_pairs_per_subject must be at least 1, got {max_pairs_per_subject}")

    candidates = candidate_pairs(manifest, split, session)
    jobs = [_pair_job(manifest, a, b, session) for a, b, _ in candidates]
    scores = score_comparisons(jobs, comparator, workers, errors, desc="pair scores")

    scored = [
        (score, a, b, partition)
        for (a, b, partition), score in zip(candidates, scores)
        if score is not None and score >= pair_threshold
    ]
    scored.sort(key=lambda item: (-item[0], item[1], item[2]))

    usage: Counter[str] = Counter()
    pairs: list[MorphPair] = []
    for score, a, b, partition in scored:
        if usage[a] >= max_pairs_per_subject or usage[b] >= max_pairs_per_subject:
            continue
        usage[a] += 1
        usage[b] += 1
        pairs.append(MorphPair(a, b, float(score), partition))

    log.info(
        "🤝 Selected %d pairs from %d candidates (%d above threshold %r, cap %d)",
        len(pairs), len(candidates), len(scored), pair_threshold, max_pairs_per_subject,
    )
    return pairs


def collect_pairing_impostor_scores(
    manifest: DatasetManifest,
    comparator: FaceComparator,
    session: int = settings.MORPH_SESSION,
    workers: int = 1,
    errors: Optional[list[ItemFailure]] = None,
) -> list[float]:
    """Comparator scores of every distinct subject pair on the morph-source session."""
    subjects = sorted((s.subject_id for s in manifest.subjects if s.session(session) is not None))
    jobs = [_pair_job(manifest, a, b, session) for a, b in itertools.combinations(subjects, 2)]
    scores = score_comparisons(jobs, comparator, workers, errors, desc="pairing impostors")
    return [s for s in scores if s is not None]


def calibrate_pairing_threshold(
    manifest: DatasetManifest,
    comparator: FaceComparator,
    far_target: float = settings.PAIR_FAR_TARGET,
    session: int = settings.MORPH_SESSION,
    workers: int = 1,
    errors: Optional[list[ItemFailure]] = None,
) -> CalibrationResult:
    """
    Per-manifest pairing threshold at `far_target`.

    Raises:
        ContractError: fewer than two subjects carry the session.
    """
    scores = collect_pairing_impostor_scores(manifest, comparator, session, workers, errors)
    if not scores:
        raise ContractError("pairing calibration needs at least two subjects with a session-1 image")
    result = calibrate_threshold(scores, far_target)
    log.info("🎯 Pairing threshold %r from %d impostor pairs (FAR %s)", result.tau, result.impostor_count, far_target)
    return result
