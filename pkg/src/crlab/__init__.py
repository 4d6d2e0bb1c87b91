"""Nonconforming P1 (Crouzeix-Raviart) elements on the distorted meshes T(n, m)."""

from .analysis import (
    ErrorReport,
    ModelProblem,
    SystemMatrices,
    analyze,
    assemble_system,
    ba_lower_bound,
    best_approx_error,
    consistency_edge_form,
    consistency_error,
    galerkin_error,
    galerkin_solve,
    interpolation_error,
    model_problem,
)
from .cr_space import CRFunction, DofMap, build_dof_map
from .mesh import MeshParams, MeshStats, Triangulation, build_mesh, mesh_stats
from .quadrature import Poly2
from .solver import EigenReport, SolveReport, friedrichs_constant, solve_spd

__version__ = "0.1.0"
