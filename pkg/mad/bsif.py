# mad/bsif.py
"""
BSIF codes from a bank of zero-mean filters.

Coefficients are snapped to multiples of 2**-34 with an exactly zero sum.
Filtering an 8-bit image with such a bank is exact in float64, so adding a
constant to the image leaves every response, and every code, unchanged.
"""

import logging

import numpy as np
from scipy import ndimage

from mad.lbp import cell_histograms
from mad.models import FeatureVector, FilterBank
from morphing.raster import RasterImage
from utils.errors import ConfigError, RankError
from utils.helpers import array_digest, stable_digest

log = logging.getLogger(__name__)

QUANTUM_BITS = 34


def quantize_filters(raw: np.ndarray) -> np.ndarray:
    """Mean-free, dyadic, exactly zero-sum copies of `raw` (n, l, l)."""
    raw = np.asarray(raw, dtype=np.float64)
    n = raw.shape[0]
    flat = raw.reshape(n, -1)
    flat = flat - flat.mean(axis=1, keepdims=True)
    scale = float(2 ** QUANTUM_BITS)
    ints = np.floor(flat * scale + 0.5).astype(np.int64)
    for row in ints:
        excess = int(row.sum())
        if excess == 0:
            continue
        # pay the excess back one quantum at a time from the largest entries
        order = np.argsort(-np.abs(row), kind="stable")
        step = 1 if excess > 0 else -1
        for j in range(abs(excess)):
            row[order[j % row.size]] -= step
    return (ints.astype(np.float64) / scale).reshape(raw.shape)


def bank_from_coefficients(raw: np.ndarray) -> FilterBank:
    """
    Validate and quantize an external bank.

    Raises:
        ConfigError: bad shape or even size.
        RankError: filters are linearly dependent once the mean is removed.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 3 or raw.shape[1] != raw.shape[2]:
        raise ConfigError(f"filter bank must have shape (n, l, l), got {raw.shape}")
    n, size = raw.shape[0], raw.shape[1]
    if size % 2 == 0:
        raise ConfigError(f"filter size must be odd, got {size}")
    if n > size * size - 1:
        raise RankError(f"{n} zero-mean {size}x{size} filters cannot be independent (max {size * size - 1})")
    quantized = quantize_filters(raw)
    rank = np.linalg.matrix_rank(quantized.reshape(n, -1))
    if rank < n:
        raise RankError(f"filter bank has rank {rank} < {n}")
    return FilterBank(quantized)


def generate_default_filterbank(n: int = 8, size: int = 11, seed: int = 1) -> FilterBank:
    """
    Seeded Gaussian filters, mean-subtracted and Gram-Schmidt orthonormalised.
    A stand-in for learned BSIF filters.
    """
    if n < 1:
        raise ConfigError("a filter bank needs at least one filter")
    if size < 1 or size % 2 == 0:
        raise ConfigError(f"filter size must be a positive odd integer, got {size}")
    if n > size * size - 1:
        raise RankError(f"cannot build {n} orthonormal zero-mean {size}x{size} filters (max {size * size - 1})")

    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, size * size))
    raw -= raw.mean(axis=1, keepdims=True)

    basis: list[np.ndarray] = []
    for vec in raw:
        v = vec.copy()
        for b in basis:
            v -= (v @ b) * b
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise RankError("random draw produced dependent filters; try another seed")
        basis.append(v / norm)

    bank = quantize_filters(np.stack(basis).reshape(n, size, size))
    log.debug("[BSIF] generated %d filters of %dx%d (seed=%d)", n, size, size, seed)
    return FilterBank(bank)


def bsif_codes(gray: np.ndarray, bank: FilterBank) -> np.ndarray:
    img = np.asarray(gray, dtype=np.float64)
    codes = np.zeros(img.shape, dtype=np.int64)
    for i, kernel in enumerate(bank.coefficients):
        response = ndimage.convolve(img, kernel, mode="reflect")
        codes |= (response > 0).astype(np.int64) << i
    return codes


def bsif_config(bank: FilterBank, grid: int) -> dict:
    return {
        "extractor": "bsif",
        "grid": int(grid),
        "n_filters": bank.n_filters,
        "size": bank.size,
        "bank": array_digest(bank.coefficients),
    }


def extract_bsif(image: RasterImage, bank: FilterBank, grid: int = 4) -> FeatureVector:
    """
    Raises:
        ConfigError: even filter size, or a grid finer than the image.
    """
    if bank.size % 2 == 0:
        raise ConfigError(f"filter size must be odd, got {bank.size}")
    if grid < 1 or image.height < grid or image.width < grid:
        raise ConfigError(f"a {grid}x{grid} grid does not fit a {image.width}x{image.height} image")
    if image.channels != 1:
        raise ConfigError("BSIF expects a preprocessed grayscale image")

    codes = bsif_codes(image.samples, bank)
    values = cell_histograms(codes, grid, 2 ** bank.n_filters)
    return FeatureVector(values, "bsif", stable_digest(bsif_config(bank, grid)))
