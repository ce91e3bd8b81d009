# morphing/geometry.py
"""
Delaunay triangulation and triangle affine maps.

Orientation and in-circle tests run on exact rationals so the mesh (and
therefore every warped pixel) is the same on every platform. Points are
inserted in lexicographic (x, y) order, each new point is joined to the hull
edges it strictly sees, and illegal edges are flipped with a strict in-circle
test. Co-circular quadruples therefore keep whichever diagonal insertion
produced first.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from utils.errors import GeometryError

log = logging.getLogger(__name__)

Point = tuple[float, float]
Triangle = tuple[int, int, int]


@dataclass(frozen=True)
class TriangleMesh:
    vertices: tuple[Point, ...]
    triangles: tuple[Triangle, ...]

    def vertex_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=np.float64)


# --- exact predicates ---

def orient(a: Sequence[Fraction], b: Sequence[Fraction], c: Sequence[Fraction]) -> Fraction:
    """> 0 when a, b, c turn counter-clockwise."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def incircle(a: Sequence[Fraction], b: Sequence[Fraction], c: Sequence[Fraction], d: Sequence[Fraction]) -> Fraction:
    """> 0 when d lies strictly inside the circumcircle of the CCW triangle abc."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    return (
        adx * (bdy * cd - bd * cdy)
        - ady * (bdx * cd - bd * cdx)
        + ad * (bdx * cdy - bdy * cdx)
    )


def _exact(points: Sequence[Point]) -> list[tuple[Fraction, Fraction]]:
    return [(Fraction(float(x)), Fraction(float(y))) for x, y in points]


# --- triangulation ---

class _Triangulation:
    """Half-edge map: (u, v) -> w for every CCW triangle (u, v, w)."""

    def __init__(self, pts: list[tuple[Fraction, Fraction]]):
        self.pts = pts
        self.apex: dict[tuple[int, int], int] = {}

    def add(self, a: int, b: int, c: int) -> None:
        self.apex[(a, b)] = c
        self.apex[(b, c)] = a
        self.apex[(c, a)] = b

    def remove(self, a: int, b: int, c: int) -> None:
        del self.apex[(a, b)]
        del self.apex[(b, c)]
        del self.apex[(c, a)]

    def is_illegal(self, a: int, b: int) -> bool:
        # (a, b, c) is a triangle; (b, a, d) its neighbour across ab
        c = self.apex.get((a, b))
        d = self.apex.get((b, a))
        if c is None or d is None:
            return False
        p = self.pts
        return incircle(p[a], p[b], p[c], p[d]) > 0

    def flip(self, a: int, b: int) -> tuple[int, int]:
        c = self.apex[(a, b)]
        d = self.apex[(b, a)]
        self.remove(a, b, c)
        self.remove(b, a, d)
        self.add(a, d, c)
        self.add(d, b, c)
        return c, d

    def legalize(self, a: int, b: int) -> None:
        stack = [(a, b)]
        while stack:
            u, v = stack.pop()
            if (u, v) not in self.apex or not self.is_illegal(u, v):
                continue
            c, d = self.flip(u, v)
            # the two outer edges on the far side may now be illegal
            stack.append((u, d))
            stack.append((d, v))

    def triangles(self) -> list[Triangle]:
        seen = set()
        out = []
        for (a, b), c in self.apex.items():
            tri = _canonical((a, b, c))
            if tri not in seen:
                seen.add(tri)
                out.append(tri)
        return sorted(out)


def _canonical(tri: Triangle) -> Triangle:
    """Rotate so the smallest index comes first; orientation is kept."""
    a, b, c = tri
    if a <= b and a <= c:
        return a, b, c
    if b <= a and b <= c:
        return b, c, a
    return c, a, b


def delaunay(points: Sequence[Point]) -> TriangleMesh:
    """
    Triangulate `points`; triangle indices refer to the input order.

    Raises:
        GeometryError: fewer than 3 points, repeated points, or all points collinear.
    """
    n = len(points)
    if n < 3:
        raise GeometryError(f"need at least 3 points, got {n}")
    pts = _exact(points)
    if len(set(pts)) != n:
        raise GeometryError("duplicate points cannot be triangulated")

    order = sorted(range(n), key=lambda i: pts[i])
    s0 = order[0]

    # first point off the line through the leading collinear run
    k = 2
    while k < n and orient(pts[s0], pts[order[1]], pts[order[k]]) == 0:
        k += 1
    if k == n:
        raise GeometryError("all points are collinear")

    tri = _Triangulation(pts)
    apex_pt = order[k]
    run = order[:k]
    left_turn = orient(pts[run[0]], pts[run[-1]], pts[apex_pt]) > 0
    for i in range(k - 1):
        u, v = run[i], run[i + 1]
        if left_turn:
            tri.add(u, v, apex_pt)
        else:
            tri.add(v, u, apex_pt)
    hull = list(run) + [apex_pt] if left_turn else [run[0], apex_pt] + run[:0:-1]

    for idx in order[k + 1:]:
        p = pts[idx]
        m = len(hull)
        visible = [orient(pts[hull[i]], pts[hull[(i + 1) % m]], p) < 0 for i in range(m)]
        if not any(visible):
            raise GeometryError("point inside hull during sweep insertion")

        # visible edges form one contiguous run of the cyclic hull
        start = next(i for i in range(m) if visible[i] and not visible[i - 1])
        run_edges = []
        i = start
        while visible[i % m] and len(run_edges) < m:
            run_edges.append(i % m)
            i += 1

        new_edges = []
        for e in run_edges:
            u, v = hull[e], hull[(e + 1) % m]
            tri.add(v, u, idx)
            new_edges.append((v, u))
        for u, v in new_edges:
            tri.legalize(u, v)

        first = run_edges[0]
        last = (run_edges[-1] + 1) % m
        # keep hull[first] and hull[last], drop the vertices strictly between, insert p
        rotated = hull[first:] + hull[:first]
        span = (last - first) % m
        hull = [rotated[0], idx] + rotated[span:]

    _final_sweep(tri)
    triangles = tri.triangles()
    log.debug("[MESH] %d points -> %d triangles", n, len(triangles))
    return TriangleMesh(vertices=tuple((float(x), float(y)) for x, y in points), triangles=tuple(triangles))


def _final_sweep(tri: _Triangulation) -> None:
    # Lawson passes until no edge is illegal
    while True:
        flipped = False
        for a, b in sorted(tri.apex):
            if a < b and (a, b) in tri.apex and tri.is_illegal(a, b):
                tri.flip(a, b)
                flipped = True
        if not flipped:
            return


# --- affine maps ---

def triangle_affine(src: Sequence[Point], dst: Sequence[Point]) -> np.ndarray:
    """
    Coefficients [[a, b, c], [d, e, f]] with dst = M @ (x, y, 1) for each vertex.
    """
    src_arr = np.asarray(src, dtype=np.float64)
    dst_arr = np.asarray(dst, dtype=np.float64)
    if src_arr.shape != (3, 2) or dst_arr.shape != (3, 2):
        raise GeometryError("triangle_affine needs exactly three (x, y) points per triangle")
    ex = _exact([tuple(p) for p in src_arr.tolist()])
    if orient(ex[0], ex[1], ex[2]) == 0:
        raise GeometryError("source triangle is degenerate")
    system = np.column_stack([src_arr, np.ones(3)])
    return np.linalg.solve(system, dst_arr).T
