# vulnerability/models.py
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from utils.errors import ContractError
from utils.helpers import alpha_tag


@dataclass(frozen=True)
class ScoreEntry:
    morph_id: str
    attempt: int
    subject_index: int
    score: float


@dataclass(frozen=True)
class VulnerabilityScoreTable:
    """
    Comparison scores of morphs against the probes of their K contributing
    subjects; attempt p pairs probe p of every subject.
    """

    entries: tuple[ScoreEntry, ...]
    k: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.k < 1:
            raise ContractError("K must be at least 1")
        seen: dict[tuple[str, int], set[int]] = defaultdict(set)
        for e in self.entries:
            if not math.isfinite(e.score):
                raise ContractError(f"non-finite score for {e.morph_id} attempt {e.attempt}")
            if e.attempt < 1:
                raise ContractError(f"attempt index must start at 1, got {e.attempt}")
            if not 1 <= e.subject_index <= self.k:
                raise ContractError(f"subject index {e.subject_index} outside 1..{self.k}")
            slot = seen[(e.morph_id, e.attempt)]
            if e.subject_index in slot:
                raise ContractError(f"duplicate score for {e.morph_id} attempt {e.attempt} subject {e.subject_index}")
            slot.add(e.subject_index)
        for (morph_id, attempt), subjects in seen.items():
            if len(subjects) != self.k:
                raise ContractError(f"{morph_id} attempt {attempt} has {len(subjects)} of {self.k} scores")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def is_empty(self) -> bool:
        return not self.entries

    def attempts(self) -> dict[tuple[str, int], tuple[float, ...]]:
        """(morph_id, attempt) -> scores ordered by subject index, keys sorted."""
        grouped: dict[tuple[str, int], dict[int, float]] = defaultdict(dict)
        for e in self.entries:
            grouped[(e.morph_id, e.attempt)][e.subject_index] = e.score
        return {key: tuple(grouped[key][s] for s in range(1, self.k + 1)) for key in sorted(grouped)}

    def morphs(self) -> dict[str, list[tuple[float, ...]]]:
        """morph_id -> per-attempt score tuples in attempt order."""
        out: dict[str, list[tuple[float, ...]]] = defaultdict(list)
        for (morph_id, _), scores in self.attempts().items():
            out[morph_id].append(scores)
        return dict(out)

    def subject_scores(self, subject_index: int) -> list[float]:
        return [scores[subject_index - 1] for scores in self.attempts().values()]

    @staticmethod
    def concat(tables: Sequence["VulnerabilityScoreTable"]) -> "VulnerabilityScoreTable":
        ks = {t.k for t in tables}
        if len(ks) > 1:
            raise ContractError(f"cannot merge tables with different K: {sorted(ks)}")
        entries = tuple(e for t in tables for e in t.entries)
        return VulnerabilityScoreTable(entries, k=ks.pop() if ks else 2)


@dataclass(frozen=True)
class CalibrationResult:
    tau: float
    far_target: float
    impostor_count: int
    # true when no observed score met the target and tau sits just above the maximum
    sentinel: bool = False


@dataclass(frozen=True)
class AlphaBreakdown:
    alpha: float
    fmmpmr_percent: float
    mmpmr_percent: float
    morph_count: int
    attempt_count: int


@dataclass(frozen=True)
class VulnerabilityReport:
    fmmpmr_percent: float
    mmpmr_percent: float
    tau: float
    per_alpha: dict[float, AlphaBreakdown]
    scatter: dict[float, list[tuple[float, float]]]
    box: dict[float, dict[str, dict[str, Any]]]
    missing_alphas: tuple[float, ...] = ()
    comparator_label: str = ""
    calibration: Optional[CalibrationResult] = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "comparator": self.comparator_label,
            "tau": self.tau,
            "fmmpmr_percent": self.fmmpmr_percent,
            "mmpmr_percent": self.mmpmr_percent,
            "per_alpha": {
                alpha_tag(a): {
                    "fmmpmr_percent": b.fmmpmr_percent,
                    "mmpmr_percent": b.mmpmr_percent,
                    "morphs": b.morph_count,
                    "attempts": b.attempt_count,
                }
                for a, b in sorted(self.per_alpha.items())
            },
            "box": {alpha_tag(a): groups for a, groups in sorted(self.box.items())},
            "missing_alphas": [alpha_tag(a) for a in self.missing_alphas],
            "calibration": None if self.calibration is None else {
                "tau": self.calibration.tau,
                "far_target": self.calibration.far_target,
                "n": self.calibration.impostor_count,
                "sentinel": self.calibration.sentinel,
            },
            "metadata": self.metadata,
        }
