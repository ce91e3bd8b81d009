# mad/hog.py
import numpy as np

from mad.models import FeatureVector
from morphing.raster import RasterImage
from utils.errors import ConfigError
from utils.helpers import stable_digest

HOG_EPS = 1e-6
HOG_CLIP = 0.2


def hog_config(cell: int, block: int, bins: int) -> dict:
    return {"extractor": "hog", "cell": int(cell), "block": int(block), "stride": 1, "bins": int(bins)}


def hog_dimension(width: int, height: int, cell: int = 8, block: int = 2, bins: int = 9) -> int:
    blocks_x = width // cell - block + 1
    blocks_y = height // cell - block + 1
    return max(blocks_x, 0) * max(blocks_y, 0) * block * block * bins


def gradients(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central differences; the one-pixel border keeps a zero gradient."""
    img = np.asarray(gray, dtype=np.float64)
    gx = np.zeros_like(img)
    gy = np.zeros_like(img)
    gx[:, 1:-1] = img[:, 2:] - img[:, :-2]
    gy[1:-1, :] = img[2:, :] - img[:-2, :]
    return gx, gy


def cell_histograms(gray: np.ndarray, cell: int, bins: int) -> np.ndarray:
    """
    Unsigned orientation histograms, shape (cells_y, cells_x, bins).
    Bin centres sit at 0, 180/bins, ... degrees; each vote is split linearly
    between the two nearest centres, wrapping at 180.
    """
    gx, gy = gradients(gray)
    magnitude = np.hypot(gx, gy)
    angle = np.mod(np.degrees(np.arctan2(gy, gx)), 180.0)

    h, w = magnitude.shape
    cells_y, cells_x = h // cell, w // cell
    magnitude = magnitude[:cells_y * cell, :cells_x * cell]
    angle = angle[:cells_y * cell, :cells_x * cell]

    position = angle / (180.0 / bins)
    lower = np.floor(position).astype(np.int64)
    upper_weight = position - lower
    lower = lower % bins
    upper = (lower + 1) % bins

    rows, cols = np.indices(magnitude.shape)
    cell_index = (rows // cell) * cells_x + (cols // cell)
    total = cells_y * cells_x * bins
    hist = np.bincount(
        (cell_index * bins + lower).ravel(), weights=(magnitude * (1.0 - upper_weight)).ravel(), minlength=total
    )
    hist += np.bincount(
        (cell_index * bins + upper).ravel(), weights=(magnitude * upper_weight).ravel(), minlength=total
    )
    return hist.reshape(cells_y, cells_x, bins)


def _normalize(v: np.ndarray) -> np.ndarray:
    v = v / np.sqrt(np.sum(v * v) + HOG_EPS ** 2)
    v = np.minimum(v, HOG_CLIP)
    return v / np.sqrt(np.sum(v * v) + HOG_EPS ** 2)


def hog_descriptor(gray: np.ndarray, cell: int = 8, block: int = 2, bins: int = 9) -> np.ndarray:
    """
    Raises:
        ConfigError: the image cannot hold one block.
    """
    h, w = np.asarray(gray).shape
    if cell < 1 or block < 1 or bins < 1:
        raise ConfigError("HOG cell, block and bins must be positive")
    if h < cell * block or w < cell * block:
        raise ConfigError(f"a {w}x{h} image is smaller than one {block}x{block} block of {cell}px cells")

    hist = cell_histograms(gray, cell, bins)
    cells_y, cells_x, _ = hist.shape
    out = []
    for by in range(cells_y - block + 1):
        for bx in range(cells_x - block + 1):
            out.append(_normalize(hist[by:by + block, bx:bx + block].ravel()))
    return np.concatenate(out)


def extract_hog(image: RasterImage, cell: int = 8, block: int = 2, bins: int = 9) -> FeatureVector:
    if image.channels != 1:
        raise ConfigError("HOG expects a preprocessed grayscale image")
    values = hog_descriptor(image.samples, cell, block, bins)
    return FeatureVector(values, "hog", stable_digest(hog_config(cell, block, bins)))
