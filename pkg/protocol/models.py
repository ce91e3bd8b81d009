# protocol/models.py
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Protocol

from utils.errors import ContractError

GENDERS = ("F", "M")
BIN_LABELS = ("MorphAge-I", "MorphAge-II", "custom")
PARTITIONS = ("train", "dev", "test")


class FaceComparator(Protocol):
    """Anything that turns two face image files into a similarity in [0, 1]."""

    label: str

    def compare(self, path_a: Path, path_b: Path) -> float: ...


@dataclass(frozen=True)
class SessionEntry:
    session_index: int
    capture_age: float
    image_path: str
    landmark_path: str


@dataclass(frozen=True)
class SubjectRecord:
    subject_id: str
    gender: str
    sessions: tuple[SessionEntry, ...]

    def session(self, index: int) -> Optional[SessionEntry]:
        for entry in self.sessions:
            if entry.session_index == index:
                return entry
        return None

    @property
    def session_indices(self) -> tuple[int, ...]:
        return tuple(s.session_index for s in self.sessions)


@dataclass(frozen=True)
class DatasetManifest:
    subjects: tuple[SubjectRecord, ...]
    bin_label: str = "custom"
    landmark_count: int = 68
    base_dir: Path = field(default=Path("."), compare=False)

    def __post_init__(self) -> None:
        if self.bin_label not in BIN_LABELS:
            raise ContractError(f"unknown bin label '{self.bin_label}'")
        if self.landmark_count < 1:
            raise ContractError("landmark_count must be positive")

    def __len__(self) -> int:
        return len(self.subjects)

    def __iter__(self) -> Iterator[SubjectRecord]:
        return iter(self.subjects)

    @property
    def subject_ids(self) -> tuple[str, ...]:
        return tuple(s.subject_id for s in self.subjects)

    def get(self, subject_id: str) -> SubjectRecord:
        for subject in self.subjects:
            if subject.subject_id == subject_id:
                return subject
        raise ContractError(f"subject '{subject_id}' not in manifest")

    def resolve(self, relative: str) -> Path:
        path = Path(relative)
        return path if path.is_absolute() else self.base_dir / path

    def image_file(self, subject_id: str, session_index: int) -> Path:
        entry = self.get(subject_id).session(session_index)
        if entry is None:
            raise ContractError(f"subject '{subject_id}' has no session {session_index}")
        return self.resolve(entry.image_path)

    def landmark_file(self, subject_id: str, session_index: int) -> Path:
        entry = self.get(subject_id).session(session_index)
        if entry is None:
            raise ContractError(f"subject '{subject_id}' has no session {session_index}")
        return self.resolve(entry.landmark_path)


@dataclass(frozen=True)
class ProtocolSplit:
    train_ids: frozenset[str]
    dev_ids: frozenset[str]
    test_ids: frozenset[str]
    seed: int
    ratios: tuple[float, float, float]

    def partition(self, name: str) -> frozenset[str]:
        if name == "train":
            return self.train_ids
        if name == "dev":
            return self.dev_ids
        if name == "test":
            return self.test_ids
        raise ContractError(f"unknown partition '{name}'")

    def partition_of(self, subject_id: str) -> Optional[str]:
        for name in PARTITIONS:
            if subject_id in self.partition(name):
                return name
        return None

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.train_ids), len(self.dev_ids), len(self.test_ids)

    @property
    def all_ids(self) -> frozenset[str]:
        return self.train_ids | self.dev_ids | self.test_ids


@dataclass(frozen=True)
class MorphPair:
    subject_a: str
    subject_b: str
    pair_score: float
    split: str

    def __post_init__(self) -> None:
        if self.subject_a == self.subject_b:
            raise ContractError(f"a morph pair needs two subjects, got '{self.subject_a}' twice")
        if self.split not in PARTITIONS:
            raise ContractError(f"unknown partition '{self.split}'")

    @property
    def pair_id(self) -> str:
        return f"{self.subject_a}+{self.subject_b}"
