# mad/thresholds.py
import dataclasses
import logging
from typing import Optional, Sequence

from config import settings
from evaluation.iso import DetectionScoreSet, threshold_at_apcer
from mad.models import LABEL_ATTACK, LABEL_BONA_FIDE, MadModel
from utils.helpers import alpha_tag

log = logging.getLogger(__name__)

ScoreRow = tuple[str, str, float]


def score_set(rows: Sequence[ScoreRow], alpha: Optional[float] = None) -> DetectionScoreSet:
    """
    Bona fide and attack scores of labelled rows. With `alpha`, only attacks
    whose morph id ends in that alpha are kept; bona fide rows always stay.
    """
    suffix = None if alpha is None else f"@{alpha_tag(alpha)}"
    bona = [s for _, label, s in rows if label == LABEL_BONA_FIDE]
    attacks = [
        s for sample_id, label, s in rows
        if label == LABEL_ATTACK and (suffix is None or sample_id.endswith(suffix))
    ]
    return DetectionScoreSet.from_lists(bona, attacks)


def select_operating_thresholds(
    model: MadModel,
    dev_scores: DetectionScoreSet,
    apcer_targets: Sequence[float] = settings.APCER_TARGETS,
) -> MadModel:
    """
    For each APCER target (percent) keep the dev threshold with APCER <= target
    and the lowest BPCER. Returns a new model; the input is untouched.

    Raises:
        ContractError: a dev class is empty or a target lies outside (0, 100].
    """
    thresholds = {}
    dev_bpcer = {}
    for target in sorted(float(t) for t in apcer_targets):
        op = threshold_at_apcer(dev_scores, target)
        thresholds[target] = op.threshold
        dev_bpcer[target] = op.bpcer
        log.info(
            "🎚️ %s: APCER<=%g%% -> threshold %r (dev APCER %.2f%%, BPCER %.2f%%)",
            model.extractor_id, target, op.threshold, op.apcer, op.bpcer,
        )
    return dataclasses.replace(model, operating_thresholds=thresholds, dev_bpcer=dev_bpcer)
