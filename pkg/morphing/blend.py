# morphing/blend.py
import logging

from morphing.raster import LandmarkSet, RasterImage
from morphing.warp import frame_mesh, piecewise_warp
from utils.errors import ContractError
from utils.helpers import to_u8

log = logging.getLogger(__name__)


def morph_pair(
    image_a: RasterImage,
    landmarks_a: LandmarkSet,
    image_b: RasterImage,
    landmarks_b: LandmarkSet,
    alpha: float,
) -> RasterImage:
    """
    Morph two faces; alpha is the weight of the second subject.

    Both images are warped onto L = (1 - alpha) * La + alpha * Lb and blended
    per channel as (1 - alpha) * Wa + alpha * Wb.

    Raises:
        ContractError: alpha outside [0, 1], mismatched image shapes or landmark counts.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ContractError(f"alpha must lie in [0, 1], got {alpha}")
    if image_a.shape != image_b.shape:
        raise ContractError(f"image shapes differ: {image_a.shape} vs {image_b.shape}")
    if len(landmarks_a) != len(landmarks_b):
        raise ContractError(f"landmark count mismatch: {len(landmarks_a)} vs {len(landmarks_b)}")

    target = LandmarkSet.interpolate(landmarks_a, landmarks_b, alpha)
    # one mesh for both warps
    mesh = frame_mesh(target, image_a.width, image_a.height)

    warped_a = piecewise_warp(image_a, landmarks_a, target, mesh=mesh)
    warped_b = piecewise_warp(image_b, landmarks_b, target, mesh=mesh)
    blended = (1.0 - alpha) * warped_a.as_float() + alpha * warped_b.as_float()
    return RasterImage(to_u8(blended))

