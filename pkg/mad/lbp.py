# mad/lbp.py
"""
LBP(8, 1) texture histograms.

Neighbours are read clockwise starting at the top-left pixel; neighbour i
contributes 2**i when it is >= the centre.
"""

import numpy as np

from mad.models import FeatureVector
from morphing.raster import RasterImage
from utils.errors import ConfigError
from utils.helpers import stable_digest

# (dy, dx) clockwise from top-left
NEIGHBOUR_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))
LBP_MODES = ("full256", "uniform59")


def _transitions(code: int) -> int:
    bits = [(code >> i) & 1 for i in range(8)]
    return sum(bits[i] != bits[(i + 1) % 8] for i in range(8))


def _uniform_table() -> np.ndarray:
    # 58 uniform codes keep their own bin (ascending code order), everything else shares bin 58
    table = np.full(256, 58, dtype=np.int64)
    next_bin = 0
    for code in range(256):
        if _transitions(code) <= 2:
            table[code] = next_bin
            next_bin += 1
    return table


UNIFORM_TABLE = _uniform_table()


def lbp_codes(gray: np.ndarray) -> np.ndarray:
    """Codes for interior pixels only: shape (h - 2, w - 2)."""
    img = np.asarray(gray, dtype=np.int16)
    h, w = img.shape
    if h < 3 or w < 3:
        raise ConfigError(f"LBP needs at least a 3x3 image, got {w}x{h}")
    centre = img[1:h - 1, 1:w - 1]
    codes = np.zeros(centre.shape, dtype=np.int64)
    for bit, (dy, dx) in enumerate(NEIGHBOUR_OFFSETS):
        neighbour = img[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
        codes |= (neighbour >= centre).astype(np.int64) << bit
    return codes


def cell_bounds(length: int, grid: int) -> list[tuple[int, int]]:
    return [(i * length // grid, (i + 1) * length // grid) for i in range(grid)]


def cell_histograms(codes: np.ndarray, grid: int, bins: int) -> np.ndarray:
    """Unit-sum histogram per cell, cells concatenated row-major."""
    h, w = codes.shape
    out = []
    for y0, y1 in cell_bounds(h, grid):
        for x0, x1 in cell_bounds(w, grid):
            cell = codes[y0:y1, x0:x1].ravel()
            hist = np.bincount(cell, minlength=bins).astype(np.float64)
            out.append(hist / cell.size)
    return np.concatenate(out)


def lbp_config(grid: int, mode: str) -> dict:
    return {"extractor": "lbp", "grid": int(grid), "mode": mode, "radius": 1, "neighbours": 8}


def extract_lbp(image: RasterImage, grid: int = 4, mode: str = "full256") -> FeatureVector:
    """
    Raises:
        ConfigError: unknown mode, or a grid cell smaller than 3x3 pixels.
    """
    if mode not in LBP_MODES:
        raise ConfigError(f"unknown LBP mode '{mode}' (expected one of {LBP_MODES})")
    if grid < 1:
        raise ConfigError("LBP grid must be at least 1x1")
    if image.channels != 1:
        raise ConfigError("LBP expects a preprocessed grayscale image")
    h, w = image.height, image.width
    if h // grid < 3 or w // grid < 3:
        raise ConfigError(f"a {grid}x{grid} grid on {w}x{h} gives cells smaller than 3x3")

    codes = lbp_codes(image.samples)
    if mode == "uniform59":
        codes = UNIFORM_TABLE[codes]
        bins = 59
    else:
        bins = 256
    values = cell_histograms(codes, grid, bins)
    return FeatureVector(values, "lbp", stable_digest(lbp_config(grid, mode)))
