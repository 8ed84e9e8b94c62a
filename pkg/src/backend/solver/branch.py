"""
Minimal-solution branch of beta Delta^2 u - tau Delta u = lambda / (1 - u)^2

The monotone scheme u_n = solve(lambda / (1 - u_{n-1})^2) is run to its
fixed point at each lambda; continuation in lambda brackets the pull-in
value lambda* between the last convergent and first divergent lambda.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar

from backend.calculus.grid import GridFunction, RadialGrid, integrate_radial, make_grid
from backend.solver.navier import NavierSolver
from backend.solver.params import ProblemParams
from backend.stability.eigen import mu1_of_solution, navier_eigen_smallest
from backend.subsolutions.profiles import TABLE_ONE
from backend.utils.config import load_settings
from backend.utils.errors import BracketError, ConfigurationError, NonConvergence, SolverFailure

logger = logging.getLogger(__name__)

SAFETY_MARGIN = 1e-3
MONOTONE_SLACK = 1e-10

CSV_COLUMNS = ["lambda", "sup_norm", "energy", "inverse_cubed_mass", "mu1", "iterations"]


@dataclass(frozen=True, eq=False)
class BranchPoint:
    """Converged minimal solution at one lambda"""

    lam: float
    u: GridFunction
    sup_norm: float
    energy: float
    inverse_cubed_mass: float
    mu1: Optional[float] = None
    iterations: int = 0
    residual: float = 0.0
    energy_gap: float = 0.0

    def to_row(self) -> Dict[str, Any]:
        return {
            "lambda": self.lam,
            "sup_norm": self.sup_norm,
            "energy": self.energy,
            "inverse_cubed_mass": self.inverse_cubed_mass,
            "mu1": self.mu1 if self.mu1 is not None else float("nan"),
            "iterations": self.iterations,
        }


@dataclass(frozen=True, eq=False)
class BranchResult:
    """Accepted points in increasing lambda and the pull-in bracket"""

    params: ProblemParams
    points: List[BranchPoint]
    lambda_star_low: float
    lambda_star_high: float
    upper_bound: float = float("inf")
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def relative_width(self) -> float:
        if math.isinf(self.lambda_star_high):
            return math.inf
        return (self.lambda_star_high - self.lambda_star_low) / self.lambda_star_high

    @property
    def last(self) -> Optional[BranchPoint]:
        return self.points[-1] if self.points else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([p.to_row() for p in self.points], columns=CSV_COLUMNS)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        logger.info("wrote %d branch points to %s", len(self.points), path)
        return path

    def summary(self) -> Dict[str, Any]:
        return {
            "params": self.params.describe(),
            "lambda_star_low": self.lambda_star_low,
            "lambda_star_high": self.lambda_star_high,
            "relative_width": self.relative_width,
            "upper_bound": self.upper_bound,
            "points": len(self.points),
            "max_energy": max((p.energy for p in self.points), default=0.0),
            "max_inverse_cubed_mass": max((p.inverse_cubed_mass for p in self.points), default=0.0),
            "min_energy_gap": min((p.energy_gap for p in self.points), default=0.0),
            **self.meta,
        }


def default_solver_grid() -> RadialGrid:
    settings = load_settings()
    return make_grid(settings.grid_size, settings.r_min)


def _source(lam: float, u: np.ndarray) -> np.ndarray:
    return lam / (1.0 - u) ** 2


def branch_energy(params: ProblemParams, u: GridFunction) -> float:
    """int (tau |u'|^2 + beta (Delta u)^2) r^(N-1)"""
    r = u.grid.nodes
    w = u.meta.get("minus_laplacian")
    if w is None:
        raise ConfigurationError("energy needs the Laplacian stored by the Navier solver")
    gradient = np.gradient(u.values, r, edge_order=2)
    return integrate_radial(params.tau * gradient**2 + params.beta * w**2, u.grid, params.N)


def energy_gap(solver: NavierSolver, u: np.ndarray, lifting: np.ndarray) -> float:
    """
    sum d (u - Phi)/(1 - u)^2 - 2 sum d (u - Phi)^2/(1 - u)^3 over interior nodes

    With the lumped volumes d this is the discrete stability form evaluated at
    u - Phi divided by lambda, so it is nonnegative on the stable branch.
    """
    d = solver.measure[:-1]
    psi = (u - lifting)[:-1]
    gap_factor = 1.0 - u[:-1]
    return float(np.sum(d * psi / gap_factor**2) - 2.0 * np.sum(d * psi**2 / gap_factor**3))


def minimal_solution(
    params: ProblemParams,
    lam: float,
    tol: float = 1e-10,
    max_iter: int = 20000,
    grid: Optional[RadialGrid] = None,
    safety_margin: float = SAFETY_MARGIN,
    residual_tol: float = 1e-8,
    start: Optional[GridFunction] = None,
    with_mu1: bool = False,
    solver: Optional[NavierSolver] = None,
) -> BranchPoint:
    """
    Run the monotone iteration to the minimal solution at lam

    Args:
        params: problem parameters
        lam: lambda >= 0
        tol: sup-norm tolerance on successive iterates
        max_iter: iteration cap
        grid: radial grid (settings default when omitted)
        safety_margin: iterates with sup u > 1 - safety_margin count as touchdown
        residual_tol: relative tolerance on the nonlinear source update
        start: sub-solution to start from (a minimal solution at a smaller lambda)
        with_mu1: also compute the linearized first eigenvalue
        solver: prefactored NavierSolver for (params, grid)

    Returns:
        BranchPoint

    Raises:
        NonConvergence: touchdown or iteration cap
        SolverFailure: monotonicity broken
    """
    if lam < 0 or not math.isfinite(lam):
        raise ConfigurationError(f"lambda must be a finite nonnegative number, got {lam}")
    if tol <= 0:
        raise ConfigurationError(f"tolerance must be positive, got {tol}")

    if solver is None:
        solver = NavierSolver(params, grid or (start.grid if start is not None else default_solver_grid()))
    grid = solver.grid
    lifting = solver.lifting()
    u = lifting.values if start is None else np.asarray(start.values, dtype=float)
    if start is not None and start.grid is not grid:
        raise ConfigurationError("warm start lives on a different grid")

    ceiling = 1.0 - safety_margin
    current = lifting
    f_old = _source(lam, u)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        current = solver.solve_function(f_old)
        u_new = current.values
        sup = float(np.max(u_new))
        if not np.all(np.isfinite(u_new)) or sup > ceiling:
            logger.debug("touchdown at lambda=%.8g after %d iterations (sup u=%.6g)", lam, iteration, sup)
            raise NonConvergence(lam, "touchdown", sup, iteration)

        drop = float(np.max(u - u_new))
        if drop > MONOTONE_SLACK * max(1.0, float(np.max(np.abs(u)))):
            raise SolverFailure(f"monotone iteration decreased by {drop:.3e} at lambda={lam:.8g}")

        step = float(np.max(np.abs(u_new - u)))
        f_new = _source(lam, u_new)
        scale = float(np.sqrt(np.sum(solver.measure * f_new**2)))
        change = float(np.sqrt(np.sum(solver.measure * (f_new - f_old) ** 2)))
        residual = change / scale if scale > 0.0 else change
        u, f_old = u_new, f_new
        if step < tol and residual < residual_tol:
            break
    else:
        raise NonConvergence(lam, "max_iter", float(np.max(u)), max_iter)

    point = BranchPoint(
        lam=lam,
        u=current,
        sup_norm=float(np.max(u)),
        energy=branch_energy(params, current),
        inverse_cubed_mass=integrate_radial((1.0 - u) ** -3, grid, params.N),
        mu1=mu1_of_solution(params, lam, current) if with_mu1 else None,
        iterations=iteration,
        residual=max(residual, current.residual or 0.0),
        energy_gap=energy_gap(solver, u, lifting.values),
    )
    logger.debug(
        "minimal solution lambda=%.8g sup=%.6g in %d iterations", lam, point.sup_norm, iteration
    )
    return point


def boundary_constant(params: ProblemParams, grid: Optional[RadialGrid] = None) -> Tuple[float, float]:
    """
    (mu_1, C) for the upper bound, where C int psi = (tau alpha - beta gamma) psi'(1) - beta alpha (Delta psi)'(1)
    """
    eig = navier_eigen_smallest(params, 0.0, grid=grid or default_solver_grid())
    if params.homogeneous:
        return eig.mu, 0.0
    psi = eig.eigenfunction
    r = psi.grid.nodes
    slope = np.gradient(psi.values, r, edge_order=2)[-1]
    lap_slope = np.gradient(psi.meta["laplacian"], r, edge_order=2)[-1]
    flux = (params.tau * params.alpha - params.beta * params.gamma) * slope - params.beta * params.alpha * lap_slope
    return eig.mu, float(flux / integrate_radial(psi, psi.grid, params.N))


def lambda_star_upper_bound(params: ProblemParams, grid: Optional[RadialGrid] = None) -> float:
    """sup over alpha < u < 1 of (mu_1 u + C)(1 - u)^2"""
    mu1, C = boundary_constant(params, grid)
    if C == 0.0 and params.alpha <= 1.0 / 3.0:
        return 4.0 * mu1 / 27.0

    def negative(s: float) -> float:
        return -(mu1 * s + C) * (1.0 - s) ** 2

    low = max(params.alpha, -1e6)
    result = minimize_scalar(negative, bounds=(low, 1.0), method="bounded", options={"xatol": 1e-12})
    candidates = [-result.fun, -negative(low)]
    return float(max(max(candidates), 0.0))


def certified_table_bound(params: ProblemParams) -> Optional[float]:
    """beta lambda'_N from the certified table when it applies (tau = 0, zero data)"""
    if params.tau != 0.0 or not params.homogeneous or params.N not in TABLE_ONE:
        return None
    return params.beta * TABLE_ONE[params.N][0]


def best_upper_bound(params: ProblemParams, grid: Optional[RadialGrid] = None) -> Dict[str, Any]:
    """Both upper bounds and the smaller of the two"""
    spectral = lambda_star_upper_bound(params, grid)
    table = certified_table_bound(params)
    best = spectral if table is None else min(spectral, table)
    return {"spectral": spectral, "certified": table, "best": best}


def continue_branch(
    params: ProblemParams,
    lam_start: Optional[float] = None,
    rel_width: float = 1e-3,
    grid: Optional[RadialGrid] = None,
    growth: float = 1.5,
    max_steps: int = 400,
    with_mu1: bool = False,
    tol: float = 1e-10,
    max_iter: int = 20000,
    safety_margin: float = SAFETY_MARGIN,
) -> BranchResult:
    """
    Increase lambda until the pull-in bracket is tighter than rel_width

    Steps grow by `growth` after each convergent lambda and halve after each
    failure; every accepted point warm-starts the next solve.
    """
    grid = grid or default_solver_grid()
    if not 0.0 < rel_width < 1.0:
        raise ConfigurationError(f"relative bracket width must lie in (0, 1), got {rel_width}")
    solver = NavierSolver(params, grid)
    upper = lambda_star_upper_bound(params, grid)
    if lam_start is None:
        lam_start = 0.1 * upper
    if lam_start <= 0:
        raise ConfigurationError(f"continuation needs lambda_start > 0, got {lam_start}")

    points: List[BranchPoint] = []
    low, high = 0.0, math.inf
    step = lam_start
    lam = lam_start
    failures = 0
    for _ in range(max_steps):
        if high < math.inf and (high - low) / high < rel_width:
            break
        try:
            point = minimal_solution(
                params, lam, tol=tol, max_iter=max_iter, safety_margin=safety_margin,
                start=points[-1].u if points else None, with_mu1=with_mu1, solver=solver,
            )
        except NonConvergence as exc:
            failures += 1
            high = min(high, lam)
            step *= 0.5
            logger.debug("lambda=%.8g rejected (%s)", lam, exc.reason)
        else:
            if points:
                _check_ordering(points[-1], point)
            points.append(point)
            low = lam
            step *= growth
            logger.info("accepted lambda=%.8g sup u=%.6f", lam, point.sup_norm)

        if low >= high:
            raise BracketError(f"inconsistent bracket [{low}, {high}]")
        lam = low + step
        if lam >= high:
            step = 0.5 * (high - low)
            lam = low + step
    else:
        raise BracketError(f"bracket [{low}, {high}] not resolved after {max_steps} steps")

    logger.info("lambda* bracketed in [%.8g, %.8g] for N=%d", low, high, params.N)
    return BranchResult(
        params=params,
        points=points,
        lambda_star_low=low,
        lambda_star_high=high,
        upper_bound=upper,
        meta={"grid": grid.descriptor(), "rejections": failures, "rel_width": rel_width},
    )


def branch_on_grid(
    params: ProblemParams,
    lambdas: Sequence[float],
    grid: Optional[RadialGrid] = None,
    with_mu1: bool = False,
    tol: float = 1e-10,
    max_iter: int = 20000,
    safety_margin: float = SAFETY_MARGIN,
) -> BranchResult:
    """
    Minimal solutions at the given lambdas only (sorted, duplicates dropped)

    Stops at the first lambda without a minimal solution; that lambda becomes
    the upper end of the bracket, which stays open (+inf) otherwise.
    """
    values = sorted({float(lam) for lam in lambdas})
    if not values:
        raise ConfigurationError("empty lambda grid")
    grid = grid or default_solver_grid()
    solver = NavierSolver(params, grid)

    points: List[BranchPoint] = []
    high = math.inf
    for lam in values:
        try:
            point = minimal_solution(
                params, lam, tol=tol, max_iter=max_iter, safety_margin=safety_margin,
                start=points[-1].u if points else None, with_mu1=with_mu1, solver=solver,
            )
        except NonConvergence as exc:
            logger.info("no minimal solution at lambda=%.8g (%s)", lam, exc.reason)
            high = lam
            break
        if points:
            _check_ordering(points[-1], point)
        points.append(point)

    return BranchResult(
        params=params,
        points=points,
        lambda_star_low=points[-1].lam if points else 0.0,
        lambda_star_high=high,
        meta={"grid": grid.descriptor(), "mode": "fixed", "requested": values},
    )


def _check_ordering(previous: BranchPoint, current: BranchPoint) -> None:
    drop = float(np.max(previous.u.values - current.u.values))
    if drop > MONOTONE_SLACK or current.sup_norm <= previous.sup_norm:
        raise SolverFailure(
            f"branch is not increasing between lambda={previous.lam:.8g} and {current.lam:.8g}"
        )

