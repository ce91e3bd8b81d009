# morphing/raster.py
from dataclasses import dataclass

import numpy as np

from utils.errors import ContractError


@dataclass(frozen=True, eq=False)
class RasterImage:
    """
    8-bit image, row-major. Grayscale is stored as (h, w), colour as (h, w, 3).
    """

    samples: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.samples)
        if data.dtype != np.uint8:
            raise ContractError(f"samples must be uint8, got {data.dtype}")
        if data.ndim == 3 and data.shape[2] == 1:
            data = data[:, :, 0]
        if data.ndim not in (2, 3) or (data.ndim == 3 and data.shape[2] != 3):
            raise ContractError(f"unsupported image shape {data.shape}")
        if data.shape[0] == 0 or data.shape[1] == 0:
            raise ContractError("image has a zero dimension")
        data = np.ascontiguousarray(data)
        data.setflags(write=False)
        object.__setattr__(self, "samples", data)

    @property
    def height(self) -> int:
        return int(self.samples.shape[0])

    @property
    def width(self) -> int:
        return int(self.samples.shape[1])

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 2 else int(self.samples.shape[2])

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.height, self.width, self.channels

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RasterImage):
            return NotImplemented
        return self.samples.shape == other.samples.shape and bool(np.array_equal(self.samples, other.samples))

    def as_float(self) -> np.ndarray:
        return self.samples.astype(np.float64)


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """Ordered (x, y) points in pixel coordinates."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ContractError(f"landmarks must be an (n, 2) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ContractError("landmarks must be finite")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LandmarkSet):
            return NotImplemented
        return bool(np.array_equal(self.points, other.points))

    def check_within(self, width: int, height: int) -> None:
        """Every point must lie in [0, width) x [0, height)."""
        xs, ys = self.points[:, 0], self.points[:, 1]
        bad = np.flatnonzero((xs < 0) | (xs >= width) | (ys < 0) | (ys >= height))
        if bad.size:
            i = int(bad[0])
            raise ContractError(
                f"landmark {i} at ({xs[i]!r}, {ys[i]!r}) lies outside the {width}x{height} frame"
            )

    @staticmethod
    def interpolate(a: "LandmarkSet", b: "LandmarkSet", alpha: float) -> "LandmarkSet":
        """(1 - alpha) * a + alpha * b."""
        if len(a) != len(b):
            raise ContractError(f"landmark count mismatch: {len(a)} vs {len(b)}")
        return LandmarkSet((1.0 - alpha) * a.points + alpha * b.points)
