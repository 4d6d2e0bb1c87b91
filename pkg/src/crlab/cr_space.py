"""Crouzeix-Raviart (nonconforming P1) space with homogeneous Dirichlet data.

Degrees of freedom are values at interior-edge midpoints; boundary edges
are pinned to zero.  On a triangle the basis function of local edge k is
``1 - 2*lambda_k`` with ``lambda_k`` the barycentric coordinate of the
opposite vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import Triangulation
from .quadrature import DEFAULT_RULE, EDGE_NODES, EDGE_WEIGHTS, DegreeError, Poly2, QuadRule

PINNED = -1


@dataclass(frozen=True)
class DofMap:
    edge_to_dof: np.ndarray  # (E,), PINNED on boundary edges
    dof_to_edge: np.ndarray  # (N,)
    local_dofs: np.ndarray  # (T, 3), local edge k -> dof or PINNED

    @property
    def n_dofs(self) -> int:
        return len(self.dof_to_edge)


def build_dof_map(tri: Triangulation) -> DofMap:
    dof_to_edge = np.flatnonzero(~tri.boundary)
    edge_to_dof = np.full(tri.n_edges, PINNED, dtype=np.int64)
    edge_to_dof[dof_to_edge] = np.arange(len(dof_to_edge))
    out = DofMap(edge_to_dof, dof_to_edge, edge_to_dof[tri.triangle_edges])
    for arr in (out.edge_to_dof, out.dof_to_edge, out.local_dofs):
        arr.setflags(write=False)
    return out


@dataclass
class CRFunction:
    tri: Triangulation
    dofmap: DofMap
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.dofmap.n_dofs,):
            raise ValueError(f"expected {self.dofmap.n_dofs} dof values, got {self.values.shape}")

    @classmethod
    def zeros(cls, tri, dofmap):
        return cls(tri, dofmap, np.zeros(dofmap.n_dofs))

    def edge_values(self) -> np.ndarray:
        """Midpoint values on every edge, zero on boundary edges."""
        out = np.zeros(self.tri.n_edges)
        out[self.dofmap.dof_to_edge] = self.values
        return out

    def local_values(self) -> np.ndarray:
        return self.edge_values()[self.tri.triangle_edges]

    def gradients(self) -> np.ndarray:
        """(T, 2) piecewise constant gradient."""
        return -2.0 * np.einsum("tk,tkd->td", self.local_values(), _grad_lambda(self.tri))

    def at_barycentric(self, bary: np.ndarray) -> np.ndarray:
        """Values at barycentric points (Q, 3) on every triangle -> (T, Q)."""
        phi = 1.0 - 2.0 * bary  # (Q, 3)
        return self.local_values() @ phi.T

    def __call__(self, t: int, x: float, y: float) -> float:
        """Evaluate the restriction to triangle ``t`` at (x, y)."""
        v = self.local_values()[t]
        g = self.gradients()[t]
        c = self.tri.barycenters[t]
        # the restriction equals the mean of the three midpoint values at the barycenter
        return float(v.mean() + g @ (np.array([x, y]) - c))


def _grad_lambda(tri: Triangulation) -> np.ndarray:
    return tri.barycentric_gradients


def _scatter(dofmap: DofMap, local: np.ndarray) -> np.ndarray:
    """Sum per-triangle local vectors (T, 3) into a dof vector."""
    idx = dofmap.local_dofs.ravel()
    keep = idx >= 0
    return np.bincount(idx[keep], weights=local.ravel()[keep], minlength=dofmap.n_dofs)


def assemble_stiffness(tri: Triangulation, dofmap: DofMap) -> sp.csr_matrix:
    g = _grad_lambda(tri)
    loc = 4.0 * tri.areas[:, None, None] * np.einsum("tkd,tld->tkl", g, g)
    ld = dofmap.local_dofs
    rows = np.repeat(ld, 3, axis=1).ravel()
    cols = np.tile(ld, (1, 3)).ravel()
    keep = (rows >= 0) & (cols >= 0)
    n = dofmap.n_dofs
    A = sp.coo_matrix((loc.ravel()[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def assemble_mass_diag(tri: Triangulation, dofmap: DofMap) -> sp.dia_matrix:
    local = np.repeat(tri.areas[:, None] / 3.0, 3, axis=1)
    return sp.diags(_scatter(dofmap, local))


def _triangle_quadrature(tri: Triangulation, rule: QuadRule):
    pts = rule.points(tri.triangle_coords)  # (T, Q, 2)
    wts = tri.areas[:, None] * rule.weights[None, :]
    return pts, wts


def assemble_load(tri: Triangulation, dofmap: DofMap, f: Poly2, rule: QuadRule = DEFAULT_RULE) -> np.ndarray:
    """b_e = integral of f * phi_e."""
    if f.degree + 1 > rule.degree:
        raise DegreeError(f"load degree {f.degree} too high for rule of degree {rule.degree}")
    pts, wts = _triangle_quadrature(tri, rule)
    fv = f(pts[..., 0], pts[..., 1]) * wts  # (T, Q)
    phi = 1.0 - 2.0 * rule.bary  # (Q, 3)
    return _scatter(dofmap, fv @ phi)


def assemble_target(tri: Triangulation, dofmap: DofMap, u: Poly2, rule: QuadRule = DEFAULT_RULE) -> np.ndarray:
    """c_e = broken H1 inner product of u with phi_e."""
    if u.degree - 1 > rule.degree:
        raise DegreeError(f"degree {u.degree} too high for rule of degree {rule.degree}")
    pts, wts = _triangle_quadrature(tri, rule)
    gu = np.stack(
        [
            np.einsum("tq,tq->t", u.dx()(pts[..., 0], pts[..., 1]), wts),
            np.einsum("tq,tq->t", u.dy()(pts[..., 0], pts[..., 1]), wts),
        ],
        axis=1,
    )  # (T, 2) integral of grad u over each triangle
    local = -2.0 * np.einsum("tkd,td->tk", _grad_lambda(tri), gu)
    return _scatter(dofmap, local)


def edge_averages(tri: Triangulation, p: Poly2) -> np.ndarray:
    """Mean of p along every edge (exact for degree <= 5)."""
    if p.degree > 2 * len(EDGE_NODES) - 1:
        raise DegreeError(f"degree {p.degree} exceeds edge rule exactness")
    a = tri.vertices[tri.edge_vertices[:, 0]]
    b = tri.vertices[tri.edge_vertices[:, 1]]
    pts = a[:, None, :] + EDGE_NODES[None, :, None] * (b - a)[:, None, :]
    return p(pts[..., 0], pts[..., 1]) @ EDGE_WEIGHTS


def cr_interpolate(tri: Triangulation, dofmap: DofMap, u: Poly2) -> CRFunction:
    return CRFunction(tri, dofmap, edge_averages(tri, u)[dofmap.dof_to_edge])


def broken_h1_seminorm_diff(tri: Triangulation, u: Poly2, w: CRFunction | None = None,
                            rule: QuadRule = DEFAULT_RULE) -> float:
    """(sum over triangles of the integral of |grad u - grad w|^2) ** 0.5."""
    pts, wts = _triangle_quadrature(tri, rule)
    ex = u.dx()(pts[..., 0], pts[..., 1])
    ey = u.dy()(pts[..., 0], pts[..., 1])
    if w is not None:
        gw = w.gradients()
        ex = ex - gw[:, 0:1]
        ey = ey - gw[:, 1:2]
    return float(np.sqrt(np.sum(wts * (ex * ex + ey * ey))))


def broken_h1_inner(tri: Triangulation, u: Poly2, w: CRFunction, rule: QuadRule = DEFAULT_RULE) -> float:
    """(u, w) in the broken H1 inner product."""
    pts, wts = _triangle_quadrature(tri, rule)
    gw = w.gradients()
    ix = np.einsum("tq,tq->t", u.dx()(pts[..., 0], pts[..., 1]), wts)
    iy = np.einsum("tq,tq->t", u.dy()(pts[..., 0], pts[..., 1]), wts)
    return float(np.sum(ix * gw[:, 0] + iy * gw[:, 1]))


def l2_inner(tri: Triangulation, f: Poly2, w: CRFunction, rule: QuadRule = DEFAULT_RULE) -> float:
    pts, wts = _triangle_quadrature(tri, rule)
    return float(np.sum(f(pts[..., 0], pts[..., 1]) * w.at_barycentric(rule.bary) * wts))


def l2_norm(w: CRFunction, rule: QuadRule = DEFAULT_RULE) -> float:
    wts = w.tri.areas[:, None] * rule.weights[None, :]
    v = w.at_barycentric(rule.bary)
    return float(np.sqrt(np.sum(wts * v * v)))


def h1_seminorm(w: CRFunction) -> float:
    g = w.gradients()
    return float(np.sqrt(np.sum(w.tri.areas * np.einsum("td,td->t", g, g))))


def vh1_lower_identity(tri: Triangulation, w: CRFunction) -> tuple[float, float]:
    """Directional-derivative sum and three times the squared seminorm.

    Along local edge k the derivative of w is 2 * (difference of the other
    two midpoint values) / |e|, which is checked against the gradient.
    """
    v = w.local_values()
    p = tri.triangle_coords
    arr = np.zeros(tri.n_triangles)
    for k in range(3):
        k1, k2 = (k + 1) % 3, (k + 2) % 3
        # derivative along edge k, oriented from vertex k1 to vertex k2
        length = np.hypot(*(p[:, k2] - p[:, k1]).T)
        d = 2.0 * (v[:, k1] - v[:, k2]) / length
        arr += d * d
    lhs = float(np.sum(tri.areas * arr))
    rhs = 3.0 * h1_seminorm(w) ** 2
    return lhs, rhs


def write_coo(A, path) -> None:
    """Write a sparse matrix as 'row col value' lines (0-based)."""
    C = sp.coo_matrix(A)
    order = np.lexsort((C.col, C.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {C.shape[0]} {C.shape[1]} {C.nnz}\n")
        for r, c, v in zip(C.row[order], C.col[order], C.data[order]):
            fh.write(f"{r} {c} {float(v)!r}\n")
