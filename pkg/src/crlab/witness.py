"""Oscillating witness function bounding the consistency error from below.

On the lower-left quarter [0, 1/2]^2 the midpoint value of an edge is
+psi for slope n/m, -psi for slope -n/m and 0 for horizontal or boundary
edges, where psi(x, y) = 2h x (1-2x)(1-2y).  The rest of the square follows
by reflection across x = 1/2 and y = 1/2; each reflection flips slopes.

Every triangle has exactly one horizontal edge.  Its midpoint P = (x0, y0)
is the reference point; the triangle is "+" when its apex lies above P.
Wall triangles have a vertical boundary edge and take P = (0, y0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import SystemMatrices
from .cr_space import CRFunction, build_dof_map, h1_seminorm
from .mesh import Triangulation

INTERIOR, WALL, SYMMETRY = 0, 1, 2
CLASS_NAMES = {INTERIOR: "interior", WALL: "wall", SYMMETRY: "symmetry"}


def psi(x, y, h):
    return 2.0 * h * x * (1.0 - 2.0 * x) * (1.0 - 2.0 * y)


@dataclass
class WitnessFunction:
    function: CRFunction
    kind: np.ndarray  # (T,) INTERIOR / WALL / SYMMETRY, after folding into the quarter
    sign: np.ndarray  # (T,) +1 apex above the reference point, -1 below
    reference: np.ndarray  # (T, 2) reference point folded into [0, 1/2]^2

    @property
    def values(self):
        return self.function.values


def fold(p):
    """Reflect points into [0, 1/2]^2; returns folded points and reflection count."""
    p = np.asarray(p, dtype=float)
    flips = (p[..., 0] > 0.5).astype(int) + (p[..., 1] > 0.5).astype(int)
    return np.minimum(p, 1.0 - p), flips


def _classify(tri: Triangulation):
    """Reference point, kind and sign of every triangle."""
    slopes = tri.edge_slopes[tri.triangle_edges]  # (T, 3)
    horiz = slopes == 0
    if not np.all(horiz.sum(axis=1) == 1):
        bad = np.flatnonzero(horiz.sum(axis=1) != 1)[0]
        raise ValueError(f"triangle {bad} at {tri.barycenters[bad]} has no unique horizontal edge")
    e_h = tri.triangle_edges[horiz]
    base_mid = tri.edge_midpoints[e_h]
    wall = np.any(slopes == 2, axis=1)
    ref = base_mid.copy()
    # wall triangles: P sits on the vertical side
    ref[wall, 0] = np.where(base_mid[wall, 0] < 0.5, 0.0, 1.0)
    sign = np.where(tri.barycenters[:, 1] > base_mid[:, 1], 1, -1)
    ref_f, _ = fold(ref)
    # reflection across y = 1/2 swaps above and below
    sign = np.where(ref[:, 1] > 0.5, -sign, sign)
    kind = np.full(tri.n_triangles, INTERIOR, dtype=np.int8)
    kind[np.isclose(ref_f[:, 0], 0.5, rtol=0.0, atol=1e-14)] = SYMMETRY
    kind[wall] = WALL
    return ref_f, kind, sign


def build_witness(tri: Triangulation) -> WitnessFunction:
    h = tri.params.h
    dofmap = build_dof_map(tri)
    mid, flips = fold(tri.edge_midpoints)
    cls = tri.edge_slopes.astype(int)
    slanted = np.abs(cls) == 1
    folded_cls = np.where(flips % 2 == 1, -cls, cls)
    values = np.where(slanted, folded_cls * psi(mid[:, 0], mid[:, 1], h), 0.0)
    values[tri.boundary] = 0.0
    ref, kind, sign = _classify(tri)
    return WitnessFunction(CRFunction(tri, dofmap, values[dofmap.dof_to_edge]), kind, sign, ref)


def lemma2_gradients(kind, sign, ref, h, k):
    """Closed-form gradient of the witness on a folded triangle."""
    kappa = h * h / k
    x0, y0 = ref[..., 0], ref[..., 1]
    a = 1.0 - 2.0 * y0 - sign * k
    gx = np.where(
        kind == INTERIOR,
        -sign * (4.0 * x0 * (1.0 - 2.0 * x0) - 2.0 * h * h) * a,
        np.where(kind == WALL, -sign * 2.0 * h * (1.0 - h) * a, 0.0),
    )
    gy = np.where(
        kind == INTERIOR,
        2.0 * kappa * (4.0 * x0 - 1.0) * a,
        np.where(kind == WALL, -2.0 * kappa * (1.0 - h) * a, 2.0 * kappa * (1.0 - h) * a),
    )
    return np.stack([gx, gy], axis=-1)


def quarter_triangles(tri: Triangulation) -> np.ndarray:
    """Triangles lying in [0, 1/2]^2, including those straddling x = 1/2."""
    c = tri.barycenters
    return np.flatnonzero((c[:, 0] <= 0.5 + 1e-12) & (c[:, 1] <= 0.5))


def verify_lemma2_gradients(tri: Triangulation, w: WitnessFunction) -> float:
    """Max relative deviation of the assembled gradients from the closed forms."""
    if tri.params.n % 2:
        raise ValueError("gradient identities are checked for even n only")
    q = quarter_triangles(tri)
    g = w.function.gradients()[q]
    ref = w.reference[q]
    if np.any(ref[:, 0] > 0.5 + 1e-14) or np.any(ref[:, 1] > 0.5 + 1e-14):
        bad = q[np.argmax(ref.max(axis=1))]
        raise ValueError(f"triangle {bad} has reference point {w.reference[bad]} outside the quarter")
    # folded triangles in the quarter are unreflected, so signs apply directly
    expected = lemma2_gradients(w.kind[q], w.sign[q], ref, tri.params.h, tri.params.k)
    scale = np.maximum(np.linalg.norm(expected, axis=1), np.finfo(float).tiny)
    return float(np.max(np.linalg.norm(g - expected, axis=1) / scale))


@dataclass
class WitnessReport:
    norm: float
    consistency_value: float
    fw: float
    ratio: float
    gradient_check_max_dev: float


def witness_report(system: SystemMatrices, w: WitnessFunction) -> WitnessReport:
    x = w.values
    norm = h1_seminorm(w.function)
    fw = float(system.b @ x)
    cv = float(system.c @ x) - fw
    dev = verify_lemma2_gradients(system.tri, w) if system.tri.params.n % 2 == 0 else math.nan
    return WitnessReport(norm=norm, consistency_value=cv, fw=fw, ratio=cv / norm, gradient_check_max_dev=dev)
