"""Error quantities for the Poisson model problem on T(n, m).

With ``v*`` the discrete H1 projection of ``u`` and ``u_h`` the Galerkin
solution, the Galerkin error splits orthogonally into the best
approximation error |u - v*| and the consistency error |v* - u_h|.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .cr_space import (
    CRFunction,
    DofMap,
    _triangle_quadrature,
    assemble_load,
    assemble_mass_diag,
    assemble_stiffness,
    assemble_target,
    broken_h1_seminorm_diff,
    build_dof_map,
    cr_interpolate,
)
from .mesh import MeshParams, Triangulation, build_mesh, mesh_stats
from .quadrature import DEFAULT_RULE, EDGE_NODES, EDGE_WEIGHTS, Poly2
from .solver import DIRECT_THRESHOLD, SPDSolver, friedrichs_constant


@dataclass(frozen=True)
class ModelProblem:
    """Exact polynomial solution u with f = -laplace(u).

    ``validate`` checks that u vanishes on the boundary of the unit square;
    oracle tests switch it off for data that does not.
    """

    u: Poly2
    f: Poly2 = None
    validate: bool = True

    def __post_init__(self):
        f = -self.u.laplacian() if self.f is None else self.f
        object.__setattr__(self, "f", f)
        if self.validate:
            if f != -self.u.laplacian():
                raise ValueError("f must equal -laplace(u)")
            sides = (self.u.restrict_x(0.0), self.u.restrict_x(1.0),
                     self.u.restrict_y(0.0), self.u.restrict_y(1.0))
            if any(np.any(np.abs(s) > 1e-14) for s in sides):
                raise ValueError("u must vanish on the boundary of the unit square")


def model_problem() -> ModelProblem:
    """u = x(1-x)y(1-y), f = 2(x(1-x) + y(1-y))."""
    x, y = Poly2.x(), Poly2.y()
    u = x * (1 - x) * y * (1 - y)
    f = 2 * (x * (1 - x) + y * (1 - y))
    return ModelProblem(u, f)


class SystemMatrices:
    """Stiffness, lumped mass, load and target vectors for one mesh."""

    def __init__(self, tri: Triangulation, problem: ModelProblem, tol: float = 1e-12,
                 direct_threshold: int = DIRECT_THRESHOLD):
        self.tri = tri
        self.problem = problem
        self.tol = tol
        self.direct_threshold = direct_threshold
        self.dofmap: DofMap = build_dof_map(tri)
        self.A = assemble_stiffness(tri, self.dofmap)
        self.M = assemble_mass_diag(tri, self.dofmap)
        self.b = assemble_load(tri, self.dofmap, problem.f)
        self.c = assemble_target(tri, self.dofmap, problem.u)

    @cached_property
    def solver(self) -> SPDSolver:
        return SPDSolver(self.A, tol=self.tol, direct_threshold=self.direct_threshold)

    def function(self, values) -> CRFunction:
        return CRFunction(self.tri, self.dofmap, values)


def assemble_system(tri: Triangulation, problem: ModelProblem | None = None, tol: float = 1e-12,
                    direct_threshold: int = DIRECT_THRESHOLD) -> SystemMatrices:
    return SystemMatrices(tri, problem if problem is not None else model_problem(), tol, direct_threshold)


def galerkin_solve(system: SystemMatrices) -> CRFunction:
    return system.function(system.solver.solve(system.b).x)


def galerkin_error(system: SystemMatrices, u_h: CRFunction) -> float:
    return broken_h1_seminorm_diff(system.tri, system.problem.u, u_h)


def best_approx_error(system: SystemMatrices) -> tuple[float, CRFunction]:
    v_star = system.function(system.solver.solve(system.c).x)
    return broken_h1_seminorm_diff(system.tri, system.problem.u, v_star), v_star


def consistency_error(system: SystemMatrices) -> tuple[float, CRFunction]:
    """Dual norm of w -> (u, w)_H1 - (f, w)_L2 and its unit-norm maximizer."""
    r = system.c - system.b
    z = system.solver.solve(r).x
    e_c = math.sqrt(max(float(r @ z), 0.0))
    if e_c == 0.0:
        return 0.0, system.function(np.zeros_like(z))
    return e_c, system.function(z / e_c)


def interpolation_error(system: SystemMatrices) -> tuple[float, CRFunction]:
    p = cr_interpolate(system.tri, system.dofmap, system.problem.u)
    return broken_h1_seminorm_diff(system.tri, system.problem.u, p), p


def _trace_values(w: CRFunction, pts: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Values of w restricted to triangles t at points pts (E, Q, 2)."""
    tri = w.tri
    mean = w.local_values().mean(axis=1)
    g = w.gradients()
    safe = np.where(t < 0, 0, t)
    val = mean[safe][:, None] + np.einsum("eqd,ed->eq", pts - tri.barycenters[safe][:, None, :], g[safe])
    return np.where((t < 0)[:, None], 0.0, val)


def consistency_edge_form(tri: Triangulation, problem: ModelProblem, w: CRFunction) -> float:
    """Sum over all edges of the integral of (grad u . n_e) [w].

    The jump is taken across the fixed normal n_e, which points out of the
    first adjacent triangle; w is zero outside the square.
    """
    a = tri.vertices[tri.edge_vertices[:, 0]]
    b = tri.vertices[tri.edge_vertices[:, 1]]
    pts = a[:, None, :] + EDGE_NODES[None, :, None] * (b - a)[:, None, :]
    nrm = tri.edge_normals
    dudn = (problem.u.dx()(pts[..., 0], pts[..., 1]) * nrm[:, 0:1]
            + problem.u.dy()(pts[..., 0], pts[..., 1]) * nrm[:, 1:2])
    jump = _trace_values(w, pts, tri.edge_triangles[:, 0]) - _trace_values(w, pts, tri.edge_triangles[:, 1])
    return float(np.sum(tri.edge_lengths * ((dudn * jump) @ EDGE_WEIGHTS)))


def ba_lower_bound(tri: Triangulation, problem: ModelProblem) -> float:
    """Sum over triangles of the L2 distance of u_x and u_y to their means, squared."""
    pts, wts = _triangle_quadrature(tri, DEFAULT_RULE)
    total = 0.0
    for d in (problem.u.dx(), problem.u.dy()):
        v = d(pts[..., 0], pts[..., 1])
        mean = np.sum(v * wts, axis=1) / tri.areas
        total += float(np.sum(wts * (v - mean[:, None]) ** 2))
    return total


@dataclass
class ErrorReport:
    n: int
    m: int
    h_T: float
    tan_half_alpha: float
    kappa: float
    E: float
    E_ba: float
    E_c: float
    E_interp: float
    ba_lower: float
    friedrichs: float = float("nan")
    extras: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        row = asdict(self)
        row.update(row.pop("extras"))
        return row


@dataclass
class PointResult:
    """Everything computed for one (n, m), kept for downstream checks."""

    system: SystemMatrices
    report: ErrorReport
    u_h: CRFunction
    v_star: CRFunction
    w_max: CRFunction


def analyze(n: int, m: int, problem: ModelProblem | None = None, tol: float = 1e-12,
            friedrichs: bool = True, direct_threshold: int = DIRECT_THRESHOLD) -> PointResult:
    tri = build_mesh(MeshParams(n, m))
    system = assemble_system(tri, problem, tol, direct_threshold)
    stats = mesh_stats(tri)
    u_h = galerkin_solve(system)
    E = galerkin_error(system, u_h)
    E_ba, v_star = best_approx_error(system)
    E_c, w_max = consistency_error(system)
    E_interp, _ = interpolation_error(system)
    report = ErrorReport(
        n=n, m=m, h_T=stats.h_T, tan_half_alpha=stats.tan_half_alpha, kappa=tri.params.kappa,
        E=E, E_ba=E_ba, E_c=E_c, E_interp=E_interp,
        ba_lower=ba_lower_bound(tri, system.problem),
    )
    if friedrichs:
        report.friedrichs = friedrichs_constant(system.A, system.M, solver=system.solver).constant
    return PointResult(system, report, u_h, v_star, w_max)
