import json
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cached_mesh
from crlab.mesh import MeshParams, build_mesh, mesh_stats


def sweep():
    return [(n, m) for n in range(1, 9) for m in sorted({n, n + 1, 2 * n, n * n, 2 * n * n})]


def test_t11_counts():
    tri = cached_mesh(1, 1)
    s = mesh_stats(tri)
    assert (s.n_vertices, s.n_triangles, s.n_edges, s.n_interior_edges) == (7, 6, 12, 6)


def test_t11_areas():
    a = cached_mesh(1, 1).areas
    assert set(np.round(a, 15)) == {0.25, 0.125}
    assert a.sum() == pytest.approx(1.0, abs=1e-15)


def test_t48_triangle_count():
    assert cached_mesh(4, 8).n_triangles == 2 * 8 * (2 * 4 + 1) == 144


def test_vertex_set_t23():
    tri = cached_mesh(2, 3)
    got = {(Fraction(x).limit_denominator(100), Fraction(y).limit_denominator(100)) for x, y in tri.vertices}
    want = set()
    for j in range(7):
        xs = range(0, 5, 2) if j % 2 == 0 else [0, 1, 3, 4]
        want |= {(Fraction(i, 4), Fraction(j, 6)) for i in xs}
    assert got == want


@pytest.mark.parametrize("n,m", sweep())
def test_topology(n, m):
    tri = cached_mesh(n, m)
    # Euler with the outer face
    assert tri.n_vertices - tri.n_edges + tri.n_triangles + 1 == 2
    assert tri.n_triangles == 2 * m * (2 * n + 1)
    # orientation
    p = tri.triangle_coords
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    assert np.all(cross > 0)
    # edge <-> triangle incidence agrees both ways
    for e, (t0, t1) in enumerate(tri.edge_triangles):
        assert e in tri.triangle_edges[t0]
        assert (t1 == -1) == bool(tri.boundary[e])
        if t1 >= 0:
            assert e in tri.triangle_edges[t1]
    incidence = Counter(tri.triangle_edges.ravel().tolist())
    assert all(incidence[e] == (1 if tri.boundary[e] else 2) for e in range(tri.n_edges))
    # local edge k is opposite local vertex k
    for k in range(3):
        ev = tri.edge_vertices[tri.triangle_edges[:, k]]
        assert not np.any(ev == tri.triangles[:, k : k + 1])
    mid = tri.edge_midpoints[tri.interior_edges]
    assert np.all((mid > 0) & (mid < 1))


@pytest.mark.parametrize("n,m", [(1, 1), (3, 5), (4, 8), (5, 50)])
def test_areas(n, m):
    tri = cached_mesh(n, m)
    a = tri.areas
    wall = np.any(tri.edge_slopes[tri.triangle_edges] == 2, axis=1)
    assert wall.sum() == 2 * 2 * m
    np.testing.assert_allclose(a[wall], 1 / (8 * n * m), rtol=1e-12)
    np.testing.assert_allclose(a[~wall], 1 / (4 * n * m), rtol=1e-12)
    assert a.sum() == pytest.approx(1.0, rel=1e-13)


@pytest.mark.parametrize("n,m", [(2, 3), (4, 8), (3, 9)])
def test_reflection_symmetry(n, m):
    tri = cached_mesh(n, m)

    def key(coords):
        return {tuple(sorted(map(tuple, np.round(c, 12)))) for c in coords}

    base = key(tri.triangle_coords)
    for fx, fy in ((True, False), (False, True)):
        c = tri.triangle_coords.copy()
        if fx:
            c[..., 0] = 1 - c[..., 0]
        if fy:
            c[..., 1] = 1 - c[..., 1]
        assert key(c) == base


@pytest.mark.parametrize("n,m,tan", [(4, 8, 2.0), (1, 1, 1.0), (4, 64, 16.0)])
def test_stats(n, m, tan):
    s = mesh_stats(cached_mesh(n, m))
    assert abs(s.h_T - 1 / n) <= 1e-14
    assert s.tan_half_alpha == pytest.approx(tan, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 40))
def test_stats_match_formulas(n, extra):
    m = n + extra
    tri = build_mesh(MeshParams(n, m))
    s = mesh_stats(tri)
    assert abs(s.h_T - 1 / n) <= 1e-14
    assert s.tan_half_alpha == pytest.approx(m / n, rel=1e-12)
    assert s.min_area == pytest.approx(1 / (8 * n * m), rel=1e-12)


def test_edge_slopes_and_normals():
    tri = cached_mesh(3, 7)
    d = tri.vertices[tri.edge_vertices[:, 1]] - tri.vertices[tri.edge_vertices[:, 0]]
    cls = tri.edge_slopes
    slanted = np.abs(cls) == 1
    np.testing.assert_allclose(d[slanted, 1] / d[slanted, 0], cls[slanted] * 3 / 7, rtol=1e-12)
    assert np.all(d[cls == 0, 1] == 0) and np.all(d[cls == 2, 0] == 0)
    nrm = tri.edge_normals
    np.testing.assert_allclose(np.linalg.norm(nrm, axis=1), 1.0, rtol=1e-14)
    assert np.allclose(np.einsum("ij,ij->i", nrm, d), 0.0, atol=1e-15)
    out = tri.edge_midpoints - tri.barycenters[tri.edge_triangles[:, 0]]
    assert np.all(np.einsum("ij,ij->i", nrm, out) > 0)


def test_interior_edges_sorted_by_midpoint():
    tri = cached_mesh(3, 4)
    mid = tri.edge_midpoints
    order = np.lexsort((mid[:, 1], mid[:, 0]))
    assert np.array_equal(order, np.arange(tri.n_edges))


def test_deterministic():
    a, b = build_mesh(MeshParams(3, 5)), build_mesh(MeshParams(3, 5))
    assert np.array_equal(a.triangles, b.triangles) and np.array_equal(a.edge_vertices, b.edge_vertices)


def test_immutable():
    with pytest.raises(ValueError):
        cached_mesh(2, 2).vertices[0, 0] = 1.0


def test_json_export(tmp_path):
    tri = cached_mesh(1, 1)
    path = tmp_path / "mesh.json"
    tri.to_json(path)
    data = json.loads(path.read_text())
    assert data["params"] == {"n": 1, "m": 1}
    assert len(data["vertices"]) == 7 and len(data["triangles"]) == 6
    assert sum(not e["boundary"] for e in data["edges"]) == 6


@pytest.mark.parametrize("n,m,exc", [(0, 1, ValueError), (1, 0, ValueError), (3, 2, ValueError), (1.5, 2, TypeError)])
def test_rejects(n, m, exc):
    with pytest.raises(exc):
        MeshParams(n, m)
