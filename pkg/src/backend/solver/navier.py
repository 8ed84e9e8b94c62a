"""
Linear Navier problem beta Delta^2 u - tau Delta u = f, u(1) = alpha, Delta u(1) = gamma,
factored through w = -Delta u into two second-order radial solves
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from backend.calculus.grid import GridFunction, RadialGrid
from backend.calculus.operators import radial_operators
from backend.solver.params import ProblemParams
from backend.utils.errors import EvaluationError, SolverFailure

logger = logging.getLogger(__name__)


def _weighted_norm(values: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sqrt(np.sum(weights * values**2)))


class NavierSolver:
    """
    Prefactored two-stage solver for one (params, grid) pair

    Stage 1: -beta Delta w + tau w = f with w(1) = -gamma
    Stage 2: -Delta u = w with u(1) = alpha
    """

    def __init__(self, params: ProblemParams, grid: RadialGrid):
        self.params = params
        self.grid = grid
        self.ops = radial_operators(grid, params.N)
        # physical control volumes; tiny cells near r = 0 may underflow to zero
        self.measure = self.ops.volumes * grid.nodes ** (params.N - 1)

        self._stage1 = self.ops.dirichlet_system(params.beta, params.tau)
        self._stage2 = self.ops.dirichlet_system(1.0, 0.0)
        try:
            self._lu1 = splu(self._stage1)
            self._lu2 = splu(self._stage2)
        except RuntimeError as exc:
            raise SolverFailure(f"singular Navier system: {exc}") from exc

    def _stage_residual(self, matrix: sparse.csc_matrix, solution: np.ndarray, rhs: np.ndarray) -> float:
        res = (matrix @ solution - rhs)[:-1]
        scale = _weighted_norm(rhs[:-1], self.measure[:-1])
        norm = _weighted_norm(res, self.measure[:-1])
        if norm == 0.0:
            return 0.0
        return norm / scale if scale > 0.0 else norm

    def operator_residual(self, u: np.ndarray, f: np.ndarray) -> float:
        """
        Relative residual of beta L(L u) - tau L u - f on the interior nodes

        L is the discrete Laplacian with L u = gamma imposed at r = 1. It is
        at most the stage-1 residual plus beta |L| times the stage-2
        residual, so it also measures how rounding in the second stage is
        amplified by the outer Laplacian.
        """
        lap_u = self.ops.apply_laplacian(u)
        lap_u[-1] = self.params.gamma
        bilap_u = self.ops.apply_laplacian(lap_u)
        res = (self.params.beta * bilap_u - self.params.tau * lap_u - f)[:-1]
        scale = _weighted_norm(f[:-1], self.measure[:-1])
        norm = _weighted_norm(res, self.measure[:-1])
        return norm / scale if scale > 0.0 else norm

    def solve(self, f: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        """
        Solve for u given samples of f

        Returns:
            (u, w, residual) with w = -Delta u and the larger of the two
            relative stage residuals. The composed fourth-order residual is
            bounded by these; operator_residual computes it directly.
        """
        f = np.asarray(f, dtype=float)
        if f.shape != (self.grid.size,):
            raise SolverFailure(f"right-hand side has {f.size} samples for {self.grid.size} nodes")
        if not np.all(np.isfinite(f[:-1])):
            raise EvaluationError("right-hand side is not finite on the grid")

        rhs1 = f.copy()
        rhs1[-1] = -self.params.gamma
        w = self._lu1.solve(rhs1)

        rhs2 = w.copy()
        rhs2[-1] = self.params.alpha
        u = self._lu2.solve(rhs2)

        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(w))):
            raise SolverFailure("Navier solve produced non-finite values")

        residual = max(
            self._stage_residual(self._stage1, w, rhs1),
            self._stage_residual(self._stage2, u, rhs2),
        )
        return u, w, residual

    def solve_function(self, f: np.ndarray) -> GridFunction:
        f = np.asarray(f, dtype=float)
        u, w, residual = self.solve(f)
        return GridFunction(
            grid=self.grid,
            values=u,
            boundary_value=self.params.alpha,
            boundary_laplacian=self.params.gamma,
            residual=residual,
            meta={"minus_laplacian": w, "operator_residual": self.operator_residual(u, f)},
        )

    def lifting(self) -> GridFunction:
        """Phi: the solution with f = 0 carrying the boundary data"""
        return self.solve_function(np.zeros(self.grid.size))


def solve_navier_linear(params: ProblemParams, f: GridFunction, solver: Optional[NavierSolver] = None) -> GridFunction:
    """
    Solve beta Delta^2 u - tau Delta u = f with Navier data from params

    Args:
        params: coefficients and boundary data
        f: right-hand side samples on a grid
        solver: prefactored solver for the same params and grid

    Returns:
        GridFunction u with residual and meta["minus_laplacian"] = w
    """
    if solver is None or solver.grid is not f.grid or solver.params != params:
        solver = NavierSolver(params, f.grid)
    u = solver.solve_function(f.values)
    logger.debug("Navier solve N=%d residual %.2e", params.N, u.residual)
    return u


def navier_lifting(params: ProblemParams, grid: RadialGrid) -> GridFunction:
    return NavierSolver(params, grid).lifting()
