# evaluation/iso.py
"""
Detection error rates in percent.

Scores are attack-like when high; a sample is classified as an attack when
score >= threshold. APCER counts attacks below the threshold, BPCER counts
bona fide samples at or above it.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Literal, Mapping, Optional, Sequence

import numpy as np

from utils.errors import ContractError

log = logging.getLogger(__name__)

Mode = Literal["dev_calibrated", "direct"]
MODES = ("dev_calibrated", "direct")


@dataclass(frozen=True, eq=False)
class DetectionScoreSet:
    bona_fide_scores: np.ndarray
    attack_scores: np.ndarray

    def __post_init__(self) -> None:
        for name in ("bona_fide_scores", "attack_scores"):
            values = np.sort(np.asarray(getattr(self, name), dtype=np.float64).ravel())
            if values.size == 0:
                raise ContractError(f"{name.replace('_', ' ')} are empty")
            if not np.all(np.isfinite(values)):
                raise ContractError(f"{name.replace('_', ' ')} must be finite")
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @classmethod
    def from_lists(cls, bona_fide: Sequence[float], attack: Sequence[float]) -> "DetectionScoreSet":
        return cls(np.asarray(list(bona_fide), dtype=np.float64), np.asarray(list(attack), dtype=np.float64))


@dataclass(frozen=True)
class DetPoint:
    threshold: float
    apcer: float
    bpcer: float


@dataclass(frozen=True)
class OperatingPoint:
    target: float
    threshold: float
    apcer: float
    bpcer: float


@dataclass(frozen=True)
class DetReport:
    eer_percent: float
    bpcer_at_apcer: dict[float, float]
    det_points: tuple[DetPoint, ...]
    mode: str
    thresholds: dict[float, float] = field(default_factory=dict)
    achieved_apcer: dict[float, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "eer_percent": self.eer_percent,
            "bpcer_at_apcer": {_target_key(t): v for t, v in sorted(self.bpcer_at_apcer.items())},
            "thresholds": {_target_key(t): v for t, v in sorted(self.thresholds.items())},
            "achieved_apcer": {_target_key(t): v for t, v in sorted(self.achieved_apcer.items())},
            "det_points": [[p.threshold, p.apcer, p.bpcer] for p in self.det_points],
        }


def _target_key(target: float) -> str:
    return f"{target:g}"


# --- rates ---

def error_rates(scores: DetectionScoreSet, threshold: float) -> tuple[float, float]:
    """(APCER, BPCER) in percent at `threshold`."""
    attacks, bona = scores.attack_scores, scores.bona_fide_scores
    misses = int(np.searchsorted(attacks, threshold, side="left"))
    false_alarms = bona.size - int(np.searchsorted(bona, threshold, side="left"))
    return 100.0 * misses / attacks.size, 100.0 * false_alarms / bona.size


def candidate_thresholds(scores: DetectionScoreSet) -> list[float]:
    """-inf, every distinct observed score ascending, +inf."""
    observed = np.unique(np.concatenate([scores.bona_fide_scores, scores.attack_scores]))
    return [-math.inf] + [float(v) for v in observed] + [math.inf]


def det_curve(scores: DetectionScoreSet) -> list[DetPoint]:
    """Exact step curve in ascending threshold order."""
    return [DetPoint(t, *error_rates(scores, t)) for t in candidate_thresholds(scores)]


def equal_error_rate(scores: DetectionScoreSet) -> float:
    """
    APCER where it meets BPCER. An exact crossing on a sweep point wins;
    otherwise the two sweep points around the sign change are joined linearly.
    """
    points = det_curve(scores)
    diffs = [p.apcer - p.bpcer for p in points]
    for p, d in zip(points, diffs):
        if d == 0.0:
            return p.apcer
    for i in range(len(points) - 1):
        d0, d1 = diffs[i], diffs[i + 1]
        if d0 < 0.0 < d1:
            t = d0 / (d0 - d1)
            p0, p1 = points[i], points[i + 1]
            return p0.apcer + t * (p1.apcer - p0.apcer)
    # the sweep runs from (0, 100) to (100, 0), so a crossing always exists
    raise ContractError("no APCER/BPCER crossing found")


def _check_target(target: float) -> None:
    if not 0.0 < target <= 100.0:
        raise ContractError(f"APCER target must lie in (0, 100], got {target}")


def threshold_at_apcer(scores: DetectionScoreSet, target: float) -> OperatingPoint:
    """
    Among candidate thresholds with APCER <= target, the one with the lowest
    BPCER; ties go to the smallest threshold.
    """
    _check_target(target)
    best: Optional[OperatingPoint] = None
    for t in candidate_thresholds(scores):
        apcer, bpcer = error_rates(scores, t)
        if apcer > target:
            continue
        if best is None or bpcer < best.bpcer:
            best = OperatingPoint(target, t, apcer, bpcer)
    if best is None:
        # unreachable: -inf always has APCER 0
        raise ContractError(f"no threshold reaches APCER <= {target}")
    return best


def bpcer_at_apcer(
    scores: DetectionScoreSet,
    target: float,
    mode: Mode = "direct",
    dev_threshold: Optional[float] = None,
) -> float:
    """
    direct: the lowest BPCER any threshold reaches with APCER <= target.
    dev_calibrated: BPCER of these scores at a threshold chosen on the dev set.

    Raises:
        ContractError: bad target, unknown mode, or no dev_threshold in dev_calibrated mode.
    """
    _check_target(target)
    if mode == "direct":
        return threshold_at_apcer(scores, target).bpcer
    if mode == "dev_calibrated":
        if dev_threshold is None:
            raise ContractError("dev_calibrated mode needs a dev threshold")
        return error_rates(scores, dev_threshold)[1]
    raise ContractError(f"unknown mode '{mode}' (expected one of {MODES})")


def build_det_report(
    scores: DetectionScoreSet,
    apcer_targets: Sequence[float],
    mode: Mode = "dev_calibrated",
    dev_thresholds: Optional[Mapping[float, float]] = None,
) -> DetReport:
    """EER, BPCER at each APCER target and the DET points of one score set."""
    bpcer: dict[float, float] = {}
    thresholds: dict[float, float] = {}
    achieved: dict[float, float] = {}
    for target in apcer_targets:
        target = float(target)
        if mode == "dev_calibrated":
            if dev_thresholds is None or target not in dev_thresholds:
                raise ContractError(f"no dev threshold for APCER target {target:g}%")
            thr = float(dev_thresholds[target])
            apcer, b = error_rates(scores, thr)
            achieved[target] = apcer
        elif mode == "direct":
            op = threshold_at_apcer(scores, target)
            thr, apcer, b = op.threshold, op.apcer, op.bpcer
        else:
            raise ContractError(f"unknown mode '{mode}' (expected one of {MODES})")
        bpcer[target] = b
        thresholds[target] = thr

    return DetReport(
        eer_percent=equal_error_rate(scores),
        bpcer_at_apcer=bpcer,
        det_points=tuple(det_curve(scores)),
        mode=mode,
        thresholds=thresholds,
        achieved_apcer=achieved,
    )
