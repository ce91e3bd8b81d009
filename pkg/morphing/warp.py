# morphing/warp.py
import logging
from typing import Optional

import numpy as np

from morphing.geometry import TriangleMesh, delaunay, triangle_affine
from morphing.raster import LandmarkSet, RasterImage
from utils.errors import ContractError
from utils.helpers import to_u8

log = logging.getLogger(__name__)

# barycentric slack for pixels sitting exactly on a shared edge
_INSIDE_EPS = 1e-9


def boundary_anchors(width: int, height: int) -> np.ndarray:
    """Four corners then four edge midpoints of the pixel-centre frame."""
    w, h = float(width - 1), float(height - 1)
    return np.array(
        [
            (0.0, 0.0), (w, 0.0), (0.0, h), (w, h),
            (w / 2.0, 0.0), (w, h / 2.0), (w / 2.0, h), (0.0, h / 2.0),
        ],
        dtype=np.float64,
    )


def with_anchors(landmarks: LandmarkSet, width: int, height: int) -> np.ndarray:
    return np.vstack([landmarks.points, boundary_anchors(width, height)])


def distinct_vertices(points: np.ndarray) -> np.ndarray:
    """
    Indices of the first occurrence of every distinct point, in input order.
    A landmark on a frame anchor, or two coinciding landmarks, become one vertex.
    """
    _, first = np.unique(points, axis=0, return_index=True)
    keep = np.sort(first)
    if keep.size != len(points):
        log.debug("[MESH] %d repeated points merged", len(points) - keep.size)
    return keep


def frame_mesh(landmarks: LandmarkSet, width: int, height: int) -> TriangleMesh:
    """Mesh over the distinct points of `landmarks` plus the frame anchors."""
    points = with_anchors(landmarks, width, height)
    return delaunay([tuple(p) for p in points[distinct_vertices(points)].tolist()])


def bilinear_sample(samples: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """
    Sample `samples` (h, w) or (h, w, c) at float coordinates, clamped to the frame.
    Returns float64 values with the channel axis last.
    """
    h, w = samples.shape[0], samples.shape[1]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0

    data = samples.astype(np.float64)
    if data.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = (1.0 - fx) * data[y0, x0] + fx * data[y0, x1]
    bottom = (1.0 - fx) * data[y1, x0] + fx * data[y1, x1]
    return (1.0 - fy) * top + fy * bottom


def assign_pixels(mesh: TriangleMesh, width: int, height: int) -> np.ndarray:
    """
    Owner triangle per pixel centre; a pixel on a shared edge belongs to the
    first triangle (mesh order) that contains it. -1 marks uncovered pixels.
    """
    owner = np.full((height, width), -1, dtype=np.int64)
    verts = mesh.vertex_array()
    for t, (a, b, c) in enumerate(mesh.triangles):
        tri = verts[[a, b, c]]
        x_lo = max(int(np.floor(tri[:, 0].min())), 0)
        x_hi = min(int(np.ceil(tri[:, 0].max())), width - 1)
        y_lo = max(int(np.floor(tri[:, 1].min())), 0)
        y_hi = min(int(np.ceil(tri[:, 1].max())), height - 1)
        if x_lo > x_hi or y_lo > y_hi:
            continue
        gy, gx = np.mgrid[y_lo:y_hi + 1, x_lo:x_hi + 1]
        l1, l2, l3 = _barycentric(tri, gx.astype(np.float64), gy.astype(np.float64))
        inside = (l1 >= -_INSIDE_EPS) & (l2 >= -_INSIDE_EPS) & (l3 >= -_INSIDE_EPS)
        region = owner[y_lo:y_hi + 1, x_lo:x_hi + 1]
        take = inside & (region < 0)
        region[take] = t
    return owner


def _barycentric(tri: np.ndarray, px: np.ndarray, py: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    (x1, y1), (x2, y2), (x3, y3) = tri
    det = (y2 - y3) * (x1 - x3) + (x3 - x2) * (y1 - y3)
    l1 = ((y2 - y3) * (px - x3) + (x3 - x2) * (py - y3)) / det
    l2 = ((y3 - y1) * (px - x3) + (x1 - x3) * (py - y3)) / det
    return l1, l2, 1.0 - l1 - l2


def piecewise_warp(
    image: RasterImage,
    src: LandmarkSet,
    dst: LandmarkSet,
    mesh: Optional[TriangleMesh] = None,
) -> RasterImage:
    """
    Move the face so that landmarks `src` land on `dst`.

    Each output pixel is located in the mesh over dst + frame anchors and pulled
    back into the source image through that triangle's inverse map. A passed
    `mesh` must come from `frame_mesh(dst, ...)`; where dst points repeat, the
    first one decides the source position.

    Raises:
        ContractError: landmark counts differ, or `mesh` does not match dst.
        GeometryError: dst landmarks cannot be triangulated.
    """
    if len(src) != len(dst):
        raise ContractError(f"landmark count mismatch: {len(src)} vs {len(dst)}")

    w, h = image.width, image.height
    dst_all = with_anchors(dst, w, h)
    keep = distinct_vertices(dst_all)
    src_pts = with_anchors(src, w, h)[keep]
    dst_pts = dst_all[keep]
    if mesh is None:
        mesh = delaunay([tuple(p) for p in dst_pts.tolist()])
    elif len(mesh.vertices) != len(dst_pts):
        raise ContractError(f"mesh has {len(mesh.vertices)} vertices, dst frame has {len(dst_pts)}")

    owner = assign_pixels(mesh, w, h)
    src_x = np.zeros((h, w), dtype=np.float64)
    src_y = np.zeros((h, w), dtype=np.float64)
    gy, gx = np.mgrid[0:h, 0:w]
    for t, (a, b, c) in enumerate(mesh.triangles):
        mask = owner == t
        if not mask.any():
            continue
        coeffs = triangle_affine(dst_pts[[a, b, c]], src_pts[[a, b, c]])
        px = gx[mask].astype(np.float64)
        py = gy[mask].astype(np.float64)
        src_x[mask] = coeffs[0, 0] * px + coeffs[0, 1] * py + coeffs[0, 2]
        src_y[mask] = coeffs[1, 0] * px + coeffs[1, 1] * py + coeffs[1, 2]

    uncovered = owner < 0
    if uncovered.any():
        # only reachable when landmarks sit outside the anchor frame
        log.warning("⚠️ %d pixels outside the mesh keep their own position", int(uncovered.sum()))
        src_x[uncovered] = gx[uncovered]
        src_y[uncovered] = gy[uncovered]

    sampled = bilinear_sample(image.samples, src_x, src_y)
    return RasterImage(to_u8(sampled))
