# utils/synthetic.py
"""
Seeded procedural face set for running every pipeline stage without a
licensed database.

Each subject gets fixed identity parameters (face shape, eye spacing,
mouth width, skin tone, freckle pattern). Each session redraws the face with
an age-dependent drift and fresh sensor noise, and writes the 68 landmarks in
the usual 68-point layout (jaw, brows, nose, eyes, outer and inner lip).
"""

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image, ImageDraw

from config import settings
from morphing.raster import LandmarkSet, RasterImage
from storage.files import atomic_write_text
from storage.images import landmarks_text, save_image
from utils.helpers import to_u8

log = logging.getLogger(__name__)

NOISE_SIGMA = 6.0
JITTER_SIGMA = 0.35
# session offsets in years from session 1: (session 2 range, session 3 range)
BIN_GAPS = {
    "MorphAge-I": ((0.1, 0.6), (1.0, 1.95)),
    "MorphAge-II": ((0.1, 0.6), (2.5, 4.95)),
}


@dataclass(frozen=True)
class FaceParams:
    cx: float
    cy: float
    rx: float
    ry: float
    eye_dx: float
    eye_w: float
    eye_h: float
    brow_arch: float
    nose_w: float
    mouth_w: float
    mouth_h: float
    skin: tuple[float, float, float]
    background: tuple[float, float, float]
    freckles: tuple[tuple[float, float, float], ...]


def identity_params(rng: np.random.Generator, size: int) -> FaceParams:
    s = size / 128.0
    rx = rng.uniform(34, 41) * s
    ry = rng.uniform(45, 51) * s
    return FaceParams(
        cx=size / 2 + rng.uniform(-2, 2) * s,
        cy=size / 2 + rng.uniform(-1, 3) * s,
        rx=rx,
        ry=ry,
        eye_dx=rng.uniform(0.36, 0.46) * rx,
        eye_w=rng.uniform(5.5, 7.5) * s,
        eye_h=rng.uniform(2.2, 3.2) * s,
        brow_arch=rng.uniform(1.0, 3.0) * s,
        nose_w=rng.uniform(5.0, 8.0) * s,
        mouth_w=rng.uniform(10.0, 15.0) * s,
        mouth_h=rng.uniform(3.0, 5.0) * s,
        skin=tuple(float(v) for v in rng.uniform([150, 110, 90], [235, 195, 170])),
        background=tuple(float(v) for v in rng.uniform(40, 200, size=3)),
        freckles=tuple(
            (float(rng.uniform(-0.7, 0.7)), float(rng.uniform(-0.2, 0.6)), float(rng.uniform(0.8, 1.8) * s))
            for _ in range(int(rng.integers(3, 9)))
        ),
    )


def aged(params: FaceParams, years: float) -> FaceParams:
    """Drift of an older capture: slightly wider face, darker skin, lower brows."""
    grow = 1.0 + 0.008 * years
    skin = tuple(max(0.0, c - 2.5 * years) for c in params.skin)
    return replace(
        params,
        rx=params.rx * grow,
        ry=params.ry * (1.0 + 0.004 * years),
        brow_arch=max(0.5, params.brow_arch - 0.15 * years),
        mouth_h=params.mouth_h * (1.0 - 0.02 * min(years, 5.0)),
        skin=skin,  # type: ignore[arg-type]
    )


def face_landmarks(p: FaceParams) -> np.ndarray:
    """68 points: jaw 0-16, brows 17-26, nose 27-35, eyes 36-47, lips 48-67."""
    pts: list[tuple[float, float]] = []
    for i in range(17):
        t = i / 16
        pts.append((p.cx - p.rx * math.cos(math.pi * t), p.cy + 0.05 * p.ry + 0.92 * p.ry * math.sin(math.pi * t)))

    eye_y = p.cy - 0.22 * p.ry
    brow_y = eye_y - 2.6 * p.eye_h - 2.0
    for side in (-1, 1):
        ex = p.cx + side * p.eye_dx
        for i in range(5):
            t = i / 4
            x = ex - 1.3 * p.eye_w + 2.6 * p.eye_w * t
            pts.append((x, brow_y - p.brow_arch * math.sin(math.pi * t)))

    for i in range(4):
        pts.append((p.cx, eye_y + 0.05 * p.ry + i * 0.1 * p.ry))
    nose_y = p.cy + 0.22 * p.ry
    for i, dx in enumerate((-1.0, -0.5, 0.0, 0.5, 1.0)):
        pts.append((p.cx + dx * p.nose_w, nose_y + (1.5 if i == 2 else 0.0)))

    for side in (-1, 1):
        ex = p.cx + side * p.eye_dx
        w, h = p.eye_w, p.eye_h
        ring = [(-w, 0.0), (-w / 3, -h), (w / 3, -h), (w, 0.0), (w / 3, h), (-w / 3, h)]
        pts.extend((ex + dx, eye_y + dy) for dx, dy in ring)

    mouth_y = p.cy + 0.5 * p.ry
    for k in range(12):
        theta = math.pi - k * 2 * math.pi / 12
        sy = math.sin(theta)
        pts.append((p.cx + p.mouth_w * math.cos(theta), mouth_y - (p.mouth_h if sy > 0 else 1.3 * p.mouth_h) * sy))
    for k in range(8):
        theta = math.pi - k * 2 * math.pi / 8
        pts.append((p.cx + 0.7 * p.mouth_w * math.cos(theta), mouth_y - 0.35 * p.mouth_h * math.sin(theta)))
    return np.array(pts, dtype=np.float64)


def draw_face(p: FaceParams, landmarks: np.ndarray, size: int, rng: np.random.Generator) -> RasterImage:
    img = Image.new("RGB", (size, size), tuple(int(c) for c in p.background))
    draw = ImageDraw.Draw(img)
    skin = tuple(int(c) for c in p.skin)
    shade = tuple(int(c * 0.75) for c in p.skin)

    draw.ellipse([p.cx - p.rx, p.cy - p.ry, p.cx + p.rx, p.cy + p.ry], fill=skin)
    hair = tuple(int(c * 0.3) for c in p.background)
    draw.chord([p.cx - p.rx, p.cy - p.ry - 4, p.cx + p.rx, p.cy - 0.2 * p.ry], 180, 360, fill=hair)

    for fx, fy, r in p.freckles:
        x, y = p.cx + fx * p.rx, p.cy + fy * p.ry
        draw.ellipse([x - r, y - r, x + r, y + r], fill=shade)

    pts = [tuple(pt) for pt in landmarks.tolist()]
    draw.line(pts[17:22], fill=(60, 40, 30), width=2)
    draw.line(pts[22:27], fill=(60, 40, 30), width=2)
    draw.line(pts[27:31], fill=shade, width=1)
    draw.line(pts[31:36], fill=shade, width=2)
    for start in (36, 42):
        eye = pts[start:start + 6]
        draw.polygon(eye, fill=(245, 245, 240), outline=(40, 30, 30))
        ex = sum(x for x, _ in eye) / 6
        ey = sum(y for _, y in eye) / 6
        r = 0.8 * min(abs(eye[1][1] - eye[5][1]), abs(eye[2][1] - eye[4][1])) / 2 + 0.5
        draw.ellipse([ex - r, ey - r, ex + r, ey + r], fill=(50, 35, 25))
    draw.polygon(pts[48:60], fill=(170, 80, 80))
    draw.polygon(pts[60:68], fill=(90, 30, 35))

    samples = np.asarray(img, dtype=np.float64)
    samples = samples + rng.normal(0.0, NOISE_SIGMA, size=samples.shape)
    return RasterImage(to_u8(samples))


def write_synthetic_bin(
    out_dir: Path,
    subjects: int,
    bin_label: str = "MorphAge-I",
    seed: int = settings.SEED,
    size: int = settings.SYNTH_IMAGE_SIZE,
    prefix: str = "S",
) -> Path:
    """
    Draw `subjects` subjects with three sessions each and write images,
    landmark files and manifest.txt under `out_dir`. Returns the manifest path.
    """
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "landmarks").mkdir(parents=True, exist_ok=True)
    gap2, gap3 = BIN_GAPS[bin_label]
    rng = np.random.default_rng([seed, subjects, len(prefix), ord(prefix[0])])

    lines = [
        f"# bin={bin_label}",
        f"# landmark_count={settings.LANDMARK_COUNT}",
        "# subject_id;gender;session_index;capture_age;image_path;landmark_path",
    ]
    for index in range(subjects):
        subject_id = f"{prefix}{index + 1:03d}"
        gender = "F" if index % 2 == 0 else "M"
        base_age = round(float(rng.uniform(18, 60)), 2)
        ages = (
            base_age,
            round(base_age + float(rng.uniform(*gap2)), 2),
            round(base_age + float(rng.uniform(*gap3)), 2),
        )
        identity = identity_params(rng, size)
        for session, age in enumerate(ages, start=1):
            params = aged(identity, age - base_age)
            points = face_landmarks(params) + rng.normal(0.0, JITTER_SIGMA, size=(settings.LANDMARK_COUNT, 2))
            points = np.clip(points, 0.0, size - 1.0)
            image = draw_face(params, points, size, rng)
            image_rel = f"images/{subject_id}_s{session}.png"
            landmark_rel = f"landmarks/{subject_id}_s{session}.txt"
            save_image(image, out_dir / image_rel)
            atomic_write_text(out_dir / landmark_rel, landmarks_text(LandmarkSet(points)))
            lines.append(f"{subject_id};{gender};{session};{age!r};{image_rel};{landmark_rel}")

    manifest = out_dir / "manifest.txt"
    atomic_write_text(manifest, "\n".join(lines) + "\n")
    log.info("🧪 Wrote %d synthetic subjects (%s) to %s", subjects, bin_label, out_dir)
    return manifest


EXPERIMENT_TEMPLATE = """\
# Synthetic run. Pairing accepts every same-gender pair (FAR 1.0); the toy
# comparator cannot reach FAR 0.1% on a dozen subjects.
[paths]
manifest = manifest.txt
{cross_line}output_root = run

[protocol]
seed = {seed}
ratios = 0.5, 0.25, 0.25
max_pairs_per_subject = 4
pair_far_target = 1.0

[morphing]
alphas = 0.3, 0.5, 0.7

[vulnerability]
vuln_far_target = 0.05

[mad]
extractors = lbp, bsif, hog
apcer_targets = 1, 5, 10

[experiment]
mode = {mode}
workers = {workers}
"""


def write_synthetic_set(
    out_dir: Path,
    subjects: int = settings.SYNTH_SUBJECTS,
    seed: int = settings.SEED,
    cross_subjects: Optional[int] = None,
    size: int = settings.SYNTH_IMAGE_SIZE,
    workers: int = settings.WORKERS,
) -> Path:
    """
    Main bin (MorphAge-I) under out_dir, an optional disjoint MorphAge-II bin
    under out_dir/cross, and an experiment.ini wired to both. Returns the
    experiment.ini path.
    """
    out_dir = Path(out_dir)
    write_synthetic_bin(out_dir, subjects, "MorphAge-I", seed, size, prefix="A")
    cross_line = ""
    if cross_subjects:
        write_synthetic_bin(out_dir / "cross", cross_subjects, "MorphAge-II", seed, size, prefix="B")
        cross_line = "cross_manifest = cross/manifest.txt\n"
    text = EXPERIMENT_TEMPLATE.format(
        cross_line=cross_line, seed=seed, mode="cross" if cross_subjects else "intra", workers=workers
    )
    return atomic_write_text(out_dir / "experiment.ini", text)
