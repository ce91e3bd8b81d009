# protocol/manifest.py
"""
Manifest ingestion.

One record per line: subject_id;gender;session_index;capture_age;image_path;landmark_path
Lines starting with '#' are comments, except the directives `# bin=<label>`
and `# landmark_count=<n>`. Relative paths resolve against the manifest's
directory.
"""

import logging
import math
from collections import OrderedDict
from pathlib import Path
from typing import Optional

from config import settings
from protocol.models import BIN_LABELS, GENDERS, DatasetManifest, SessionEntry, SubjectRecord
from storage.images import load_landmarks
from utils.errors import IntegrityError, ManifestParseError

log = logging.getLogger(__name__)

FIELD_COUNT = 6
# session-3 age gap (years) upper bounds of the two age bins
BIN_I_MAX_GAP = 2.0
BIN_II_MAX_GAP = 5.0


def infer_bin(subjects: tuple[SubjectRecord, ...], first: int = 1, last: int = 3) -> str:
    """
    MorphAge-I when every first-to-last session gap is at most 2 years,
    MorphAge-II when every gap lies in (2, 5], custom otherwise.
    """
    gaps = []
    for subject in subjects:
        a, b = subject.session(first), subject.session(last)
        if a is None or b is None:
            return "custom"
        gaps.append(b.capture_age - a.capture_age)
    if not gaps:
        return "custom"
    if all(g <= BIN_I_MAX_GAP for g in gaps):
        return "MorphAge-I"
    if all(BIN_I_MAX_GAP < g <= BIN_II_MAX_GAP for g in gaps):
        return "MorphAge-II"
    return "custom"


def _directive(line: str, path: str, line_number: int) -> Optional[tuple[str, str]]:
    body = line.lstrip("#").strip()
    if "=" not in body:
        return None
    key, _, value = body.partition("=")
    key = key.strip().lower()
    if key not in ("bin", "landmark_count"):
        return None
    value = value.strip()
    if key == "bin" and value not in BIN_LABELS:
        raise ManifestParseError(f"unknown bin '{value}' (expected one of {BIN_LABELS})", line_number, path)
    if key == "landmark_count" and (not value.isdigit() or int(value) < 1):
        raise ManifestParseError(f"landmark_count must be a positive integer, got '{value}'", line_number, path)
    return key, value


def _parse_row(line: str, path: str, line_number: int) -> tuple[str, str, SessionEntry]:
    fields = [f.strip() for f in line.split(";")]
    if len(fields) != FIELD_COUNT:
        raise ManifestParseError(f"expected {FIELD_COUNT} ';'-separated fields, got {len(fields)}", line_number, path)
    subject_id, gender, session_text, age_text, image_path, landmark_path = fields
    if not subject_id:
        raise ManifestParseError("empty subject_id", line_number, path)
    gender = gender.upper()
    if gender not in GENDERS:
        raise ManifestParseError(f"gender must be F or M, got '{fields[1]}'", line_number, path)
    try:
        session_index = int(session_text)
    except ValueError:
        raise ManifestParseError(f"session_index must be an integer, got '{session_text}'", line_number, path) from None
    if not 1 <= session_index <= 3:
        raise ManifestParseError(f"session_index must be 1..3, got {session_index}", line_number, path)
    try:
        capture_age = float(age_text)
    except ValueError:
        raise ManifestParseError(f"capture_age must be a number, got '{age_text}'", line_number, path) from None
    if not math.isfinite(capture_age) or capture_age < 0:
        raise ManifestParseError(f"capture_age must be a finite non-negative number, got '{age_text}'", line_number, path)
    if not image_path or not landmark_path:
        raise ManifestParseError("image_path and landmark_path must be non-empty", line_number, path)
    return subject_id, gender, SessionEntry(session_index, capture_age, image_path, landmark_path)


def parse_manifest(path: str | Path, check_files: bool = False) -> DatasetManifest:
    """
    Read and validate a manifest.

    With check_files, every image must exist and every landmark file must hold
    exactly landmark_count points; otherwise those checks happen on first use.

    Raises:
        ManifestParseError: malformed line (carries the line number).
        IntegrityError: duplicate subject session, conflicting gender,
            decreasing capture age, missing files or wrong landmark count.
    """
    path = Path(path)
    where = str(path)
    directives: dict[str, str] = {}
    rows: "OrderedDict[str, tuple[str, list[tuple[int, SessionEntry]]]]" = OrderedDict()

    with open(path, encoding="utf-8") as fh:
        for line_number, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                found = _directive(line, where, line_number)
                if found:
                    directives[found[0]] = found[1]
                continue
            subject_id, gender, entry = _parse_row(line, where, line_number)
            if subject_id not in rows:
                rows[subject_id] = (gender, [])
            known_gender, entries = rows[subject_id]
            if known_gender != gender:
                raise IntegrityError(f"{where}:{line_number}: subject '{subject_id}' listed as both {known_gender} and {gender}")
            if any(e.session_index == entry.session_index for _, e in entries):
                raise IntegrityError(
                    f"{where}:{line_number}: duplicate subject_id '{subject_id}' for session {entry.session_index}"
                )
            entries.append((line_number, entry))

    subjects = []
    for subject_id, (gender, entries) in rows.items():
        ordered = sorted(entries, key=lambda item: item[1].session_index)
        for (_, prev), (line_number, cur) in zip(ordered, ordered[1:]):
            if cur.capture_age < prev.capture_age:
                raise IntegrityError(
                    f"{where}:{line_number}: capture age of '{subject_id}' decreases from session "
                    f"{prev.session_index} to {cur.session_index}"
                )
        subjects.append(SubjectRecord(subject_id, gender, tuple(e for _, e in ordered)))

    landmark_count = int(directives.get("landmark_count", settings.LANDMARK_COUNT))
    bin_label = directives.get("bin") or infer_bin(tuple(subjects))
    manifest = DatasetManifest(tuple(subjects), bin_label, landmark_count, base_dir=path.parent)
    if check_files:
        verify_files(manifest)
    log.info("📒 Loaded manifest %s: %d subjects, bin %s", path.name, len(manifest), bin_label)
    return manifest


def verify_files(manifest: DatasetManifest) -> None:
    for subject in manifest.subjects:
        for entry in subject.sessions:
            image = manifest.resolve(entry.image_path)
            if not image.is_file():
                raise IntegrityError(f"missing image for {subject.subject_id} session {entry.session_index}: {image}")
            landmarks = manifest.resolve(entry.landmark_path)
            if not landmarks.is_file():
                raise IntegrityError(
                    f"missing landmarks for {subject.subject_id} session {entry.session_index}: {landmarks}"
                )
            load_landmarks(landmarks, expected=manifest.landmark_count)


def manifest_text(manifest: DatasetManifest) -> str:
    """Serialise back to the manifest format (paths as stored)."""
    lines = [f"# bin={manifest.bin_label}", f"# landmark_count={manifest.landmark_count}",
             "# subject_id;gender;session_index;capture_age;image_path;landmark_path"]
    for subject in manifest.subjects:
        for e in subject.sessions:
            lines.append(
                f"{subject.subject_id};{subject.gender};{e.session_index};{e.capture_age!r};{e.image_path};{e.landmark_path}"
            )
    return "\n".join(lines) + "\n"
