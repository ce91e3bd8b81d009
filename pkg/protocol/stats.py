# protocol/stats.py
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

from protocol.models import GENDERS, PARTITIONS, DatasetManifest, MorphPair, ProtocolSplit


@dataclass(frozen=True)
class DatasetStatistics:
    """Per-partition counts: the bona fide and morph statistics table of a bin."""

    bin_label: str
    sessions: dict[int, dict[str, int]]
    genders: dict[str, dict[str, int]]
    pairs: dict[str, int] = field(default_factory=dict)
    morphs: dict[str, int] = field(default_factory=dict)

    def rows(self) -> list[tuple[str, list[int]]]:
        """Table rows, one value per partition followed by the total."""
        out = []
        for session, counts in sorted(self.sessions.items()):
            out.append((f"Session {session}", [counts[p] for p in PARTITIONS] + [sum(counts.values())]))
        for gender, counts in sorted(self.genders.items()):
            out.append((f"Gender {gender}", [counts[p] for p in PARTITIONS] + [sum(counts.values())]))
        if self.pairs:
            out.append(("Morph pairs", [self.pairs.get(p, 0) for p in PARTITIONS] + [sum(self.pairs.values())]))
        if self.morphs:
            out.append(("Morphed images", [self.morphs.get(p, 0) for p in PARTITIONS] + [sum(self.morphs.values())]))
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "bin": self.bin_label,
            "partitions": list(PARTITIONS),
            "sessions": {str(s): counts for s, counts in sorted(self.sessions.items())},
            "genders": self.genders,
            "pairs": self.pairs,
            "morphs": self.morphs,
        }


def dataset_statistics(
    manifest: DatasetManifest,
    split: ProtocolSplit,
    pairs: Optional[Sequence[MorphPair]] = None,
    morph_counts: Optional[Mapping[str, int]] = None,
) -> DatasetStatistics:
    sessions: dict[int, dict[str, int]] = {}
    genders: dict[str, dict[str, int]] = {g: {p: 0 for p in PARTITIONS} for g in GENDERS}
    for subject in manifest.subjects:
        partition = split.partition_of(subject.subject_id)
        if partition is None:
            continue
        genders[subject.gender][partition] += 1
        for entry in subject.sessions:
            counts = sessions.setdefault(entry.session_index, {p: 0 for p in PARTITIONS})
            counts[partition] += 1

    pair_counts: dict[str, int] = {}
    if pairs is not None:
        tally = Counter(pair.split for pair in pairs)
        pair_counts = {p: tally.get(p, 0) for p in PARTITIONS}
    morphs = {p: int(morph_counts.get(p, 0)) for p in PARTITIONS} if morph_counts is not None else {}
    return DatasetStatistics(manifest.bin_label, sessions, genders, pair_counts, morphs)
