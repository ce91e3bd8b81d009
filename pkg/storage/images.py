# storage/images.py
"""
Image and landmark file I/O. PNG and binary PPM/PGM go through Pillow.
"""

import logging
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from morphing.raster import LandmarkSet, RasterImage
from utils.errors import ContractError, IntegrityError
from utils.helpers import format_float

log = logging.getLogger(__name__)

_FORMATS = {".png": "PNG", ".ppm": "PPM", ".pgm": "PPM", ".pnm": "PPM"}


def load_image(path: str | Path) -> RasterImage:
    path = Path(path)
    with Image.open(path) as img:
        img.load()
        if img.mode == "L":
            data = np.asarray(img, dtype=np.uint8)
        elif img.mode == "RGB":
            data = np.asarray(img, dtype=np.uint8)
        elif img.mode in ("I", "I;16", "I;16B", "F"):
            raise ContractError(f"{path}: only 8-bit images are supported (mode {img.mode})")
        else:
            data = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return RasterImage(data.copy())


def save_image(image: RasterImage, path: str | Path) -> Path:
    """Write atomically; the format follows the file suffix."""
    path = Path(path)
    fmt = _FORMATS.get(path.suffix.lower())
    if fmt is None:
        raise ContractError(f"unsupported image suffix '{path.suffix}' (png, ppm, pgm)")
    if path.suffix.lower() == ".pgm" and image.channels != 1:
        raise ContractError(f"{path}: PGM needs a single-channel image")
    if path.suffix.lower() == ".ppm" and image.channels != 3:
        raise ContractError(f"{path}: PPM needs a three-channel image")

    pil = Image.fromarray(np.asarray(image.samples))
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            pil.save(fh, format=fmt)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_landmarks(path: str | Path, expected: int | None = None) -> LandmarkSet:
    """One `x y` pair per line; blank lines and `#` comments are skipped."""
    path = Path(path)
    points: list[tuple[float, float]] = []
    with open(path, encoding="utf-8") as fh:
        for line_number, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise IntegrityError(f"{path}:{line_number}: expected 'x y', got {line!r}")
            try:
                points.append((float(parts[0]), float(parts[1])))
            except ValueError as e:
                raise IntegrityError(f"{path}:{line_number}: {e}") from e
    if expected is not None and len(points) != expected:
        raise IntegrityError(f"{path}: expected {expected} landmarks, found {len(points)}")
    if not points:
        raise IntegrityError(f"{path}: no landmarks")
    return LandmarkSet(np.array(points, dtype=np.float64))


def landmarks_text(landmarks: LandmarkSet) -> str:
    return "".join(f"{format_float(x)} {format_float(y)}\n" for x, y in landmarks.points.tolist())
