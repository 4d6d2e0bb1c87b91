"""Lowest-order Raviart-Thomas flux recovered from a nonconforming solution.

For f replaced by its triangle averages fbar, the nonconforming solution
u~ and the mixed flux sigma satisfy, on every triangle,

    sigma(x) = grad u~ - fbar / 2 * (x - barycenter).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import SystemMatrices
from .cr_space import CRFunction, _scatter, _triangle_quadrature
from .mesh import Triangulation
from .quadrature import DEFAULT_RULE, EDGE_NODES, EDGE_WEIGHTS


class ConformityError(RuntimeError):
    pass


@dataclass
class RTFlux:
    tri: Triangulation
    grad: np.ndarray  # (T, 2)
    fbar: np.ndarray  # (T,)

    def __call__(self, t, pts):
        """Flux of triangles ``t`` at points ``pts`` (..., 2)."""
        t = np.asarray(t)
        c = self.tri.barycenters[t]
        return self.grad[t] - 0.5 * self.fbar[t][..., None] * (pts - c)

    def divergence(self) -> np.ndarray:
        # the linear part -fbar/2 * (x - c) has divergence -fbar
        return -0.5 * self.fbar * 2.0

    def normal_jumps(self, gauss: bool = False) -> np.ndarray:
        """Max |jump of sigma . n_e| per interior edge (midpoint, or 2 Gauss points)."""
        tri = self.tri
        e = tri.interior_edges
        a = tri.vertices[tri.edge_vertices[e, 0]]
        b = tri.vertices[tri.edge_vertices[e, 1]]
        s = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)]) if gauss else np.array([0.5])
        pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
        t0 = tri.edge_triangles[e, 0][:, None]
        t1 = tri.edge_triangles[e, 1][:, None]
        nrm = tri.edge_normals[e][:, None, :]
        jump = np.sum((self(t0, pts) - self(t1, pts)) * nrm, axis=-1)
        return np.max(np.abs(jump), axis=1)


def triangle_averages(tri: Triangulation, f) -> np.ndarray:
    pts, wts = _triangle_quadrature(tri, DEFAULT_RULE)
    return np.sum(f(pts[..., 0], pts[..., 1]) * wts, axis=1) / tri.areas


def solve_averaged(system: SystemMatrices) -> tuple[CRFunction, np.ndarray]:
    """Nonconforming solution for the piecewise constant load fbar."""
    tri = system.tri
    fbar = triangle_averages(tri, system.problem.f)
    # each basis function integrates to |T|/3 over a triangle
    b = _scatter(system.dofmap, np.repeat((fbar * tri.areas / 3.0)[:, None], 3, axis=1))
    return system.function(system.solver.solve(b).x), fbar


def reconstruct_flux(tri: Triangulation, u_tilde: CRFunction, fbar: np.ndarray, atol: float = 1e-8) -> RTFlux:
    flux = RTFlux(tri, u_tilde.gradients(), np.asarray(fbar, dtype=float))
    worst = float(flux.normal_jumps().max(initial=0.0))
    if worst > atol:
        raise ConformityError(f"normal flux jump {worst:.3e} exceeds {atol:.1e}")
    return flux


def flux_error(system: SystemMatrices, flux: RTFlux) -> float:
    """L2 norm of grad u - sigma."""
    tri = system.tri
    pts, wts = _triangle_quadrature(tri, DEFAULT_RULE)
    u = system.problem.u
    t = np.arange(tri.n_triangles)[:, None]
    sig = flux(t, pts)
    ex = u.dx()(pts[..., 0], pts[..., 1]) - sig[..., 0]
    ey = u.dy()(pts[..., 0], pts[..., 1]) - sig[..., 1]
    return float(np.sqrt(np.sum(wts * (ex * ex + ey * ey))))


def edge_flux_integrals(flux: RTFlux) -> np.ndarray:
    """Integral of sigma . n_e over every edge, seen from its first triangle."""
    tri = flux.tri
    a = tri.vertices[tri.edge_vertices[:, 0]]
    b = tri.vertices[tri.edge_vertices[:, 1]]
    pts = a[:, None, :] + EDGE_NODES[None, :, None] * (b - a)[:, None, :]
    t0 = tri.edge_triangles[:, 0][:, None]
    sn = np.sum(flux(t0, pts) * tri.edge_normals[:, None, :], axis=-1)
    return tri.edge_lengths * (sn @ EDGE_WEIGHTS)
