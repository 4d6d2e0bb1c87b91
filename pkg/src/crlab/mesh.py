"""Structured distorted triangulations T(n, m) of the unit square.

The mesh is cut out by the horizontal lines y = j/(2m) and the two slanted
families of slope +n/m and -n/m.  Horizontal lines alternate between a
"full" line (vertices at x = i/n) and a "half" line (vertices at the odd
multiples of 1/(2n) plus the two corners), so every strip between two
neighbouring lines holds 2n+1 triangles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class MeshParams:
    n: int
    m: int

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and isinstance(self.m, (int, np.integer))):
            raise TypeError("n and m must be integers")
        if self.n < 1 or self.m < 1:
            raise ValueError(f"n and m must be positive, got n={self.n}, m={self.m}")
        if self.m < self.n:
            raise ValueError(f"require m >= n, got n={self.n}, m={self.m}")

    @property
    def h(self) -> float:
        """Half the long-edge length, 1/(2n)."""
        return 1.0 / (2 * self.n)

    @property
    def k(self) -> float:
        """Strip height, 1/(2m)."""
        return 1.0 / (2 * self.m)

    @property
    def kappa(self) -> float:
        return self.m / (2.0 * self.n**2)

    @property
    def mesh_width(self) -> float:
        return 1.0 / self.n

    @property
    def tan_half_alpha(self) -> float:
        return self.m / self.n


@dataclass(frozen=True)
class MeshStats:
    h_T: float
    tan_half_alpha: float
    min_area: float
    max_area: float
    n_vertices: int
    n_edges: int
    n_interior_edges: int
    n_triangles: int


class Triangulation:
    """Vertex/edge/triangle incidence of T(n, m).

    Edges are stored as parallel arrays.  ``edge_triangles[e]`` lists the
    adjacent triangles with ``-1`` padding for boundary edges, and
    ``edge_normals[e]`` points out of ``edge_triangles[e, 0]``.  Local edge
    ``k`` of a triangle is the one opposite its local vertex ``k``.
    """

    def __init__(self, params, vertices, grid_index, triangles, edge_vertices,
                 edge_triangles, triangle_edges):
        self.params = params
        self.vertices = vertices
        self.grid_index = grid_index
        self.triangles = triangles
        self.edge_vertices = edge_vertices
        self.edge_triangles = edge_triangles
        self.triangle_edges = triangle_edges
        for arr in (vertices, grid_index, triangles, edge_vertices, edge_triangles, triangle_edges):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edge_vertices)

    @cached_property
    def boundary(self) -> np.ndarray:
        b = self.edge_triangles[:, 1] < 0
        b.setflags(write=False)
        return b

    @cached_property
    def triangle_coords(self) -> np.ndarray:
        """(T, 3, 2) vertex coordinates per triangle."""
        return self.vertices[self.triangles]

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.triangle_coords
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def barycentric_gradients(self) -> np.ndarray:
        """(T, 3, 2) constant gradients of the barycentric coordinates."""
        p = self.triangle_coords
        g = np.empty_like(p)
        for k in range(3):
            a = p[:, (k + 1) % 3]
            b = p[:, (k + 2) % 3]
            # inward normal of the opposite edge, scaled by |e| / (2|T|)
            g[:, k, 0] = -(b[:, 1] - a[:, 1])
            g[:, k, 1] = b[:, 0] - a[:, 0]
        g /= 2.0 * self.areas[:, None, None]
        g.setflags(write=False)
        return g

    @cached_property
    def barycenters(self) -> np.ndarray:
        return self.triangle_coords.mean(axis=1)

    @cached_property
    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.edge_vertices[:, 0]] + self.vertices[self.edge_vertices[:, 1]])

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edge_vertices[:, 1]] - self.vertices[self.edge_vertices[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def edge_normals(self) -> np.ndarray:
        a = self.vertices[self.edge_vertices[:, 0]]
        b = self.vertices[self.edge_vertices[:, 1]]
        d = b - a
        nrm = np.column_stack([d[:, 1], -d[:, 0]]) / self.edge_lengths[:, None]
        # orient out of the first adjacent triangle
        outward = self.edge_midpoints - self.barycenters[self.edge_triangles[:, 0]]
        flip = np.einsum("ij,ij->i", nrm, outward) < 0
        nrm[flip] *= -1
        return nrm

    @cached_property
    def edge_slopes(self) -> np.ndarray:
        """Slope class per edge: 0 horizontal, +1 for slope n/m, -1 for -n/m, 2 vertical."""
        gi = self.grid_index[self.edge_vertices]
        di = gi[:, 1, 0] - gi[:, 0, 0]
        dj = gi[:, 1, 1] - gi[:, 0, 1]
        cls = np.where(dj == 0, 0, np.where(di == 0, 2, np.sign(di * dj)))
        return cls.astype(np.int8)

    @cached_property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)

    def to_dict(self) -> dict:
        return {
            "params": {"n": int(self.params.n), "m": int(self.params.m)},
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "edges": [
                {"v": [int(a), int(b)], "boundary": bool(bd)}
                for (a, b), bd in zip(self.edge_vertices, self.boundary)
            ],
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict())
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _line_indices(n: int, j: int) -> list[int]:
    if j % 2 == 0:
        return list(range(0, 2 * n + 1, 2))
    return [0] + list(range(1, 2 * n, 2)) + [2 * n]


def build_mesh(params: MeshParams) -> Triangulation:
    """Build T(n, m) strip by strip from the bottom."""
    if not isinstance(params, MeshParams):
        params = MeshParams(*params)
    n, m = params.n, params.m

    index = {}
    grid = []
    for j in range(2 * m + 1):
        for i in _line_indices(n, j):
            index[(i, j)] = len(grid)
            grid.append((i, j))
    grid = np.array(grid, dtype=np.int64)
    vertices = np.column_stack([grid[:, 0] / (2 * n), grid[:, 1] / (2 * m)])

    tris = []
    for j in range(1, 2 * m + 1):
        full, half = (j - 1, j) if j % 2 == 1 else (j, j - 1)
        for i in range(0, 2 * n, 2):
            tris.append((index[(i, full)], index[(i + 2, full)], index[(i + 1, half)]))
        tris.append((index[(0, full)], index[(1, half)], index[(0, half)]))
        for i in range(1, 2 * n - 1, 2):
            tris.append((index[(i, half)], index[(i + 2, half)], index[(i + 1, full)]))
        tris.append((index[(2 * n, full)], index[(2 * n, half)], index[(2 * n - 1, half)]))
    tris = np.array(tris, dtype=np.int64)

    # counterclockwise orientation, using exact integer grid coordinates
    g = grid[tris]
    cross = (g[:, 1, 0] - g[:, 0, 0]) * (g[:, 2, 1] - g[:, 0, 1]) - (g[:, 1, 1] - g[:, 0, 1]) * (g[:, 2, 0] - g[:, 0, 0])
    cw = cross < 0
    tris[cw] = tris[cw][:, [0, 2, 1]]

    # local edge k is opposite local vertex k
    local = np.stack([tris[:, [1, 2]], tris[:, [2, 0]], tris[:, [0, 1]]], axis=1)
    pairs = np.sort(local.reshape(-1, 2), axis=1)
    mid = grid[pairs[:, 0]] + grid[pairs[:, 1]]  # twice the midpoint in grid units
    keys = mid[:, 0] * (8 * m + 1) + mid[:, 1]
    uniq, inverse = np.unique(keys, return_inverse=True)
    inverse = inverse.ravel()
    n_edges = len(uniq)

    edge_vertices = np.empty((n_edges, 2), dtype=np.int64)
    edge_vertices[inverse] = pairs
    triangle_edges = inverse.reshape(-1, 3)

    counts = np.bincount(inverse, minlength=n_edges)
    if counts.max() > 2:
        raise RuntimeError("edge shared by more than two triangles")
    owner = np.repeat(np.arange(len(tris)), 3)
    order = np.argsort(inverse, kind="stable")
    starts = np.searchsorted(inverse[order], np.arange(n_edges))
    edge_triangles = np.full((n_edges, 2), -1, dtype=np.int64)
    edge_triangles[:, 0] = owner[order[starts]]
    two = counts == 2
    edge_triangles[two, 1] = owner[order[starts[two] + 1]]

    return Triangulation(params, vertices, grid, tris, edge_vertices, edge_triangles, triangle_edges)


def mesh_stats(tri: Triangulation) -> MeshStats:
    p = tri.triangle_coords
    h_T = 0.0
    tan_half = 0.0
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        lu = np.hypot(u[:, 0], u[:, 1])
        lv = np.hypot(v[:, 0], v[:, 1])
        dot = np.einsum("ij,ij->i", u, v)
        cross = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        # tan(a/2) = (|u||v| - u.v) / |u x v|, no cancellation for obtuse a
        tan_half = max(tan_half, float(np.max((lu * lv - dot) / cross)))
        h_T = max(h_T, float(np.max(lu)))
    return MeshStats(
        h_T=h_T,
        tan_half_alpha=tan_half,
        min_area=float(tri.areas.min()),
        max_area=float(tri.areas.max()),
        n_vertices=tri.n_vertices,
        n_edges=tri.n_edges,
        n_interior_edges=int((~tri.boundary).sum()),
        n_triangles=tri.n_triangles,
    )
