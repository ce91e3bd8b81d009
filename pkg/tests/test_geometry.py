import numpy as np
import pytest

from morphing.geometry import delaunay, orient, triangle_affine
from utils.errors import GeometryError


def _assert_delaunay(points, mesh):
    """
    Strict empty circumcircle for every triangle and hull coverage.
    Points must have integer coordinates so the oracle is exact in int64.
    """
    pts = np.asarray(points, dtype=np.float64)
    assert np.array_equal(pts, np.round(pts))
    pts = pts.astype(np.int64)
    twice_area = 0
    for tri in mesh.triangles:
        a, b, c = (pts[i] for i in tri)
        det = int((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
        assert det > 0, "triangles are counter-clockwise and non-degenerate"
        twice_area += det

        others = np.delete(pts, list(tri), axis=0)
        ad, bd, cd = a - others, b - others, c - others
        ad2, bd2, cd2 = (ad ** 2).sum(axis=1), (bd ** 2).sum(axis=1), (cd ** 2).sum(axis=1)
        incircle = (
            ad[:, 0] * (bd[:, 1] * cd2 - bd2 * cd[:, 1])
            - ad[:, 1] * (bd[:, 0] * cd2 - bd2 * cd[:, 0])
            + ad2 * (bd[:, 0] * cd[:, 1] - bd[:, 1] * cd[:, 0])
        )
        assert np.all(incircle <= 0), f"a point lies inside the circumcircle of {tri}"

    hull = _convex_hull([tuple(p) for p in pts.tolist()])
    hull_twice = sum(h[0] * k[1] - k[0] * h[1] for h, k in zip(hull, hull[1:] + hull[:1]))
    assert twice_area == hull_twice


def _convex_hull(pts):
    ordered = sorted(set(pts))

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and orient(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower, upper = half(ordered), half(list(reversed(ordered)))
    return lower[:-1] + upper[:-1]


class TestDelaunay:
    def test_single_triangle(self):
        mesh = delaunay([(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)])
        assert len(mesh.triangles) == 1

    def test_unit_square_is_two_triangles(self):
        points = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        mesh = delaunay(points)
        assert len(mesh.triangles) == 2
        _assert_delaunay(points, mesh)
        assert mesh == delaunay(points)

    def test_ten_random_points(self):
        rng = np.random.default_rng(10)
        points = list(dict.fromkeys(tuple(p) for p in rng.integers(0, 100, size=(10, 2)).astype(float).tolist()))
        _assert_delaunay(points, delaunay(points))

    def test_random_sets(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            n = int(rng.integers(3, 51))
            raw = rng.integers(0, 1000, size=(n, 2)).astype(float)
            points = list(dict.fromkeys(tuple(p) for p in raw.tolist()))
            if len(points) < 3:
                continue
            try:
                mesh = delaunay(points)
            except GeometryError:
                # only legitimate for an all-collinear draw
                assert all(orient(points[0], points[1], p) == 0 for p in points)
                continue
            _assert_delaunay(points, mesh)

    def test_grid_with_cocircular_points(self):
        points = [(float(x), float(y)) for x in range(4) for y in range(4)]
        mesh = delaunay(points)
        assert len(mesh.triangles) == 18
        _assert_delaunay(points, mesh)

    @pytest.mark.parametrize("points", [
        [(0.0, 0.0), (1.0, 1.0)],
        [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)],
        [(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)],
    ])
    def test_degenerate_input(self, points):
        with pytest.raises(GeometryError):
            delaunay(points)


class TestTriangleAffine:
    def test_identity(self):
        tri = [(1.0, 2.0), (5.0, 2.0), (3.0, 7.0)]
        np.testing.assert_allclose(triangle_affine(tri, tri), [[1, 0, 0], [0, 1, 0]], atol=1e-12)

    def test_uniform_scale(self):
        coeffs = triangle_affine([(0, 0), (1, 0), (0, 1)], [(0, 0), (2, 0), (0, 2)])
        np.testing.assert_allclose(coeffs, [[2, 0, 0], [0, 2, 0]], atol=1e-12)

    def test_translation(self):
        src = [(0.0, 0.0), (2.0, 1.0), (1.0, 3.0)]
        dst = [(x + 3, y + 4) for x, y in src]
        np.testing.assert_allclose(triangle_affine(src, dst), [[1, 0, 3], [0, 1, 4]], atol=1e-12)

    def test_degenerate_source(self):
        with pytest.raises(GeometryError):
            triangle_affine([(0, 0), (1, 1), (2, 2)], [(0, 0), (1, 0), (0, 1)])
