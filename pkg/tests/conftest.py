"""Shared fixtures: tiny images, manifests in tmp_path, a stub comparator."""

from pathlib import Path
from typing import Callable, Mapping

import numpy as np
import pytest

from morphing.raster import LandmarkSet, RasterImage
from protocol.models import DatasetManifest, ProtocolSplit, SessionEntry, SubjectRecord
from storage.files import atomic_write_text
from storage.images import landmarks_text, save_image
from utils.synthetic import write_synthetic_set

SYNTH_SEED = 7


def gradient_image(width: int = 32, height: int = 32, channels: int = 1) -> RasterImage:
    gy, gx = np.mgrid[0:height, 0:width]
    base = (gx * 5 + gy * 3) % 256
    if channels == 3:
        base = np.stack([base, (base + 80) % 256, (255 - base)], axis=-1)
    return RasterImage(base.astype(np.uint8))


def random_image(rng: np.random.Generator, width: int = 32, height: int = 32, channels: int = 3) -> RasterImage:
    shape = (height, width, channels) if channels == 3 else (height, width)
    return RasterImage(rng.integers(0, 256, size=shape, dtype=np.uint8))


def random_landmarks(rng: np.random.Generator, n: int, width: int, height: int) -> LandmarkSet:
    """Distinct interior points kept away from the frame."""
    xs = rng.uniform(3.0, width - 4.0, size=n)
    ys = rng.uniform(3.0, height - 4.0, size=n)
    return LandmarkSet(np.column_stack([np.round(xs, 3), np.round(ys, 3)]))


def frame_landmarks(rng: np.random.Generator, n: int, width: int, height: int) -> LandmarkSet:
    """Like random_landmarks, with one to three points moved onto the frame (anchors included)."""
    points = random_landmarks(rng, n, width, height).points.copy()
    w, h = float(width - 1), float(height - 1)
    anchors = [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h), (w / 2.0, 0.0), (w, h / 2.0), (w / 2.0, h), (0.0, h / 2.0)]
    for i in rng.choice(n, size=int(rng.integers(1, 4)), replace=False):
        t = float(rng.integers(0, min(width, height)))
        on_edge = [(t, 0.0), (w, t), (t, h), (0.0, t)]
        pool = anchors if rng.random() < 0.5 else on_edge
        points[i] = pool[int(rng.integers(len(pool)))]
    return LandmarkSet(points)


class TableComparator:
    """Scores from a lookup on the (sorted) pair of subject ids in the file names."""

    label = "table comparator"

    def __init__(self, scores: Mapping[tuple[str, str], float], default: float = 0.0):
        self.scores = dict(scores)
        self.default = default
        self.calls = 0

    @staticmethod
    def _subject(path: Path) -> str:
        return Path(path).stem.split("_")[0]

    def compare(self, path_a: Path, path_b: Path) -> float:
        self.calls += 1
        a, b = sorted((self._subject(path_a), self._subject(path_b)))
        return self.scores.get((a, b), self.default)


def write_manifest(
    root: Path,
    subjects: Mapping[str, str],
    sessions: tuple[int, ...] = (1, 2, 3),
    size: int = 32,
    landmark_count: int = 5,
    seed: int = 0,
    header: str = "",
) -> Path:
    """Manifest plus random images and landmarks for `subjects` (id -> gender)."""
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    lines = [f"# landmark_count={landmark_count}"]
    if header:
        lines.insert(0, header)
    for subject_id, gender in subjects.items():
        for session in sessions:
            image_rel = f"{subject_id}_s{session}.png"
            lm_rel = f"{subject_id}_s{session}.txt"
            save_image(random_image(rng, size, size), root / image_rel)
            atomic_write_text(root / lm_rel, landmarks_text(random_landmarks(rng, landmark_count, size, size)))
            lines.append(f"{subject_id};{gender};{session};{20 + session * 0.5};{image_rel};{lm_rel}")
    path = root / "manifest.txt"
    atomic_write_text(path, "\n".join(lines) + "\n")
    return path


def in_memory_manifest(subjects: Mapping[str, str], sessions: tuple[int, ...] = (1, 2, 3)) -> DatasetManifest:
    records = []
    for subject_id, gender in subjects.items():
        entries = tuple(
            SessionEntry(s, 20.0 + s, f"{subject_id}_s{s}.png", f"{subject_id}_s{s}.txt") for s in sessions
        )
        records.append(SubjectRecord(subject_id, gender, entries))
    return DatasetManifest(tuple(records))


def one_partition_split(ids, partition: str = "train") -> ProtocolSplit:
    parts = {"train": frozenset(), "dev": frozenset(), "test": frozenset()}
    parts[partition] = frozenset(ids)
    return ProtocolSplit(parts["train"], parts["dev"], parts["test"], seed=0, ratios=(1.0, 0.0, 0.0))


@pytest.fixture
def manifest_factory(tmp_path: Path) -> Callable[..., Path]:
    def _make(subjects: Mapping[str, str], **kwargs) -> Path:
        return write_manifest(tmp_path / "data", subjects, **kwargs)

    return _make


@pytest.fixture(scope="session")
def synthetic_set(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """The 12-subject synthetic bin plus a disjoint 12-subject cross bin; returns experiment.ini."""
    root = tmp_path_factory.mktemp("synthetic")
    return write_synthetic_set(root, subjects=12, seed=SYNTH_SEED, cross_subjects=12, workers=2)
