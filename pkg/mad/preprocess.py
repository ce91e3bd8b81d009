# mad/preprocess.py
import numpy as np
from PIL import Image

from config import settings
from morphing.raster import RasterImage
from utils.helpers import to_u8

_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


def to_gray(image: RasterImage) -> np.ndarray:
    """uint8 luma, round(0.299 R + 0.587 G + 0.114 B)."""
    if image.channels == 1:
        return image.samples
    luma = image.as_float() @ _LUMA
    return to_u8(luma)


def preprocess(image: RasterImage, size: int = settings.MAD_SIZE) -> RasterImage:
    """
    Grayscale, then bilinear resize to size x size.

    Raises:
        ContractError: via RasterImage for zero-sized input.
    """
    gray = to_gray(image)
    if gray.shape == (size, size):
        return RasterImage(gray)
    resized = Image.fromarray(gray.astype(np.float32)).resize((size, size), Image.Resampling.BILINEAR)
    return RasterImage(to_u8(np.asarray(resized, dtype=np.float64)))
