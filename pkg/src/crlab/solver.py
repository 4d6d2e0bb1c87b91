"""SPD solves and the top generalized eigenvalue of the mass/stiffness pencil."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

DIRECT_THRESHOLD = 200_000


class ConvergenceError(RuntimeError):
    pass


@dataclass
class SolveReport:
    x: np.ndarray
    residual: float
    iterations: int
    method: str
    residual_floor: float = 0.0


@dataclass
class EigenReport:
    lambda_max: float
    residual: float
    iterations: int
    rayleigh_history: list

    @property
    def constant(self) -> float:
        """Optimal C in ||w||_L2 <= C |w|_H1."""
        return math.sqrt(self.lambda_max)


class SPDSolver:
    """Reusable solver for a fixed SPD matrix.

    Factorizes once when the system is small enough, otherwise runs
    diagonally preconditioned CG per right-hand side.
    """

    def __init__(self, A, tol: float = 1e-12, direct_threshold: int = DIRECT_THRESHOLD,
                 maxiter: int | None = None):
        if not 0 < tol <= 1e-6:
            raise ValueError(f"tol must lie in (0, 1e-6], got {tol}")
        self.A = sp.csr_matrix(A)
        self.tol = tol
        n = self.A.shape[0]
        self.maxiter = maxiter if maxiter is not None else int(50 * math.ceil(math.sqrt(max(n, 1))))
        self.method = "direct" if n <= direct_threshold else "iterative"
        self._lu = None
        if self.method == "direct":
            self._lu = spla.splu(self.A.tocsc(), permc_spec="MMD_AT_PLUS_A",
                                 options={"SymmetricMode": True}, diag_pivot_thresh=0.0)
        else:
            d = self.A.diagonal()
            self._precond = spla.LinearOperator(self.A.shape, matvec=lambda v: v / d)

    def _residual(self, x, r, rn):
        res = np.linalg.norm(self.A @ x - r) / rn
        # rounding level of evaluating A x itself: eps * || |A| |x| || / ||r||
        floor = 10.0 * np.finfo(float).eps * np.linalg.norm(abs(self.A) @ np.abs(x)) / rn
        return float(res), float(floor)

    def solve(self, r, tol: float | None = None) -> SolveReport:
        r = np.asarray(r, dtype=float)
        tol = self.tol if tol is None else tol
        rn = np.linalg.norm(r)
        if rn == 0.0:
            return SolveReport(np.zeros_like(r), 0.0, 0, self.method)
        if self.method == "direct":
            x = self._lu.solve(r)
            iters = 1
            res, floor = self._residual(x, r, rn)
            while res > max(tol, floor) and iters < 4:
                # iterative refinement
                x = x + self._lu.solve(r - self.A @ x)
                iters += 1
                res, floor = self._residual(x, r, rn)
        else:
            count = [0]

            def cb(_):
                count[0] += 1

            x = None
            for _ in range(3):
                # restart from the iterate when the recursive residual has drifted
                budget = self.maxiter - count[0]
                if budget <= 0:
                    break
                x, info = spla.cg(self.A, r, x0=x, rtol=tol, atol=0.0, maxiter=budget, M=self._precond, callback=cb)
                res, floor = self._residual(x, r, rn)
                if info != 0 or res <= max(tol, floor):
                    break
            iters = count[0]
            if info != 0:
                raise ConvergenceError(f"CG did not converge in {self.maxiter} iterations (residual {res:.3e})")
        if res > max(tol, floor):
            raise ConvergenceError(f"residual {res:.3e} above tolerance {tol:.1e}")
        if res > tol:
            log.debug("residual %.3e limited by rounding floor %.3e", res, floor)
        return SolveReport(x, float(res), iters, self.method, float(floor))


def solve_spd(A, r, tol: float = 1e-12, direct_threshold: int = DIRECT_THRESHOLD) -> SolveReport:
    return SPDSolver(A, tol=tol, direct_threshold=direct_threshold).solve(r)


def friedrichs_constant(A, M, tol: float = 1e-12, max_sweeps: int = 2000,
                        solver: SPDSolver | None = None) -> EigenReport:
    """Largest lambda with M x = lambda A x by power iteration on A^-1 M.

    Stops once successive Rayleigh quotients agree to ``tol`` (relative).
    """
    solver = solver if solver is not None else SPDSolver(A)
    M = sp.csr_matrix(M)
    n = A.shape[0]
    x = np.ones(n)
    x /= math.sqrt(x @ (A @ x))
    history = []
    rho_old = -np.inf
    for it in range(1, max_sweeps + 1):
        y = solver.solve(M @ x).x
        x = y / math.sqrt(y @ (A @ y))
        rho = float(x @ (M @ x))
        history.append(rho)
        if abs(rho - rho_old) <= tol * abs(rho):
            r = M @ x - rho * (A @ x)
            return EigenReport(rho, float(np.linalg.norm(r) / np.linalg.norm(M @ x)), it, history)
        rho_old = rho
    raise ConvergenceError(f"power iteration stagnated after {max_sweeps} sweeps")
