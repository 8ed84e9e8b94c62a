"""
First eigenvalue of the linearized Navier operator
beta Delta^2 - tau Delta - P with h = Delta h = 0 at r = 1, computed by
shift-invert inverse iteration on the symmetric finite-volume form
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Union

import numpy as np
from scipy import sparse
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from backend.calculus.grid import GridFunction, RadialGrid, integrate_radial, make_grid
from backend.calculus.operators import RadialOperators, radial_operators
from backend.hardy_rellich.weights import RadialWeight
from backend.solver.params import ProblemParams
from backend.stability.pencil import SymmetricBand
from backend.utils.config import load_settings
from backend.utils.errors import EvaluationError, SpectralFailure

logger = logging.getLogger(__name__)

Potential = Union[float, int, np.ndarray, GridFunction, RadialWeight]

MAX_RESTARTS = 5


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Lowest eigenpair with its certified residual"""

    mu: float
    eigenfunction: GridFunction
    residual: float
    mode_index: int = 0
    iterations: int = 0
    restarts: int = 0
    meta: Dict[str, Any] = field(default_factory=dict)

    def residual_bound(self) -> float:
        return 1e-6 * abs(self.mu) + 1e-10

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu": self.mu,
            "residual": self.residual,
            "residual_bound": self.residual_bound(),
            "mode_index": self.mode_index,
            "iterations": self.iterations,
            "restarts": self.restarts,
            "grid": self.eigenfunction.grid.descriptor(),
        }


def default_grid() -> RadialGrid:
    settings = load_settings()
    return make_grid(settings.grid_size, settings.r_min)


def _sample_potential(potential: Potential, grid: RadialGrid) -> np.ndarray:
    if isinstance(potential, GridFunction):
        values = potential.values
    elif isinstance(potential, RadialWeight):
        values = potential.evaluate(grid.nodes)
    else:
        values = np.broadcast_to(np.asarray(potential, dtype=float), (grid.size,))
    if not np.all(np.isfinite(values)):
        raise EvaluationError("potential is not finite on the grid")
    return np.asarray(values, dtype=float)


def navier_form(ops: RadialOperators, beta: float, tau: float, potential: np.ndarray) -> sparse.csr_matrix:
    """
    Scaled symmetric matrix of the Navier quadratic form on interior nodes

    beta K D^-1 K + tau K - D P, where K is the Dirichlet stiffness and D the
    control volumes. This is D (beta L^2 - tau L - P) with both Navier
    conditions built into the interior Laplacian.
    """
    K = ops.stiffness()
    d = ops.interior_volumes()
    form = beta * (K @ sparse.diags(1.0 / d) @ K)
    if tau:
        form = form + tau * K
    return (form - sparse.diags(d * potential[:-1])).tocsr()


def _inverse_iteration(
    A: SymmetricBand,
    start: np.ndarray,
    shift: float,
    tol: float,
    max_iter: int,
    rayleigh_updates: bool,
):
    x = start / np.linalg.norm(start)
    sigma = shift
    mu, residual = np.nan, np.inf
    for iteration in range(1, max_iter + 1):
        try:
            z = A.shifted(sigma).solve(x)
        except (np.linalg.LinAlgError, ValueError):
            # exactly singular: the shift is an eigenvalue to working precision
            sigma += 1e-10 * (abs(sigma) + 1.0)
            continue
        if not np.all(np.isfinite(z)):
            raise SpectralFailure("inverse iteration produced non-finite values", last_iterate=x, mu=mu)
        norm = np.linalg.norm(z)
        mu = sigma + float(np.dot(z, x)) / norm**2
        residual = float(np.linalg.norm(x + (sigma - mu) * z)) / norm
        x = z / norm
        logger.debug("inverse iteration %d: mu=%.12g residual=%.3e shift=%.6g", iteration, mu, residual, sigma)
        if residual <= tol * max(abs(mu), 1.0):
            return mu, x, residual, iteration
        if rayleigh_updates and iteration >= 2 and residual < 1e-2 * max(abs(mu), 1.0):
            sigma = mu
    raise SpectralFailure(
        f"inverse iteration stalled (residual {residual:.3e} after {max_iter} steps)",
        last_iterate=x, mu=mu,
    )


def navier_eigen_smallest(
    params: ProblemParams,
    potential: Potential = 0.0,
    grid: Optional[RadialGrid] = None,
    max_iter: int = 200,
    max_restarts: int = MAX_RESTARTS,
) -> EigenResult:
    """
    Smallest eigenvalue of beta Delta^2 - tau Delta - potential with Navier rows

    Args:
        params: operator coefficients and dimension (boundary data is unused)
        potential: constant, samples, GridFunction or RadialWeight
        grid: radial grid, defaults to the solver grid from settings
        max_iter: inverse-iteration steps per attempt
        max_restarts: restarts with a lower shift before giving up

    Returns:
        EigenResult with the eigenfunction normalized in L^2(r^(N-1) dr)
    """
    if grid is None:
        grid = potential.grid if isinstance(potential, GridFunction) else default_grid()
    ops = radial_operators(grid, params.N)
    P = _sample_potential(potential, grid)
    d = ops.interior_volumes()
    A = SymmetricBand.standard_form(navier_form(ops, params.beta, params.tau, P), d, bandwidth=2)

    frame = ops.frame[:-1]
    start = np.sqrt(d) * frame * (1.0 - grid.nodes[:-1] ** 2)
    state: Dict[str, Any] = {"shift": 0.0, "restarts": 0}

    for attempt in Retrying(
        stop=stop_after_attempt(max_restarts + 1),
        retry=retry_if_exception_type(SpectralFailure),
        reraise=True,
    ):
        with attempt:
            number = attempt.retry_state.attempt_number
            if number > 1:
                state["restarts"] = number - 1
                state["shift"] = _lower_shift(A, state)
                logger.info("eigen restart %d with shift %.6g", number - 1, state["shift"])
            try:
                mu, x, residual, iterations = _inverse_iteration(
                    A, start, state["shift"], tol=1e-9, max_iter=max_iter,
                    rayleigh_updates=(number == 1),
                )
            except SpectralFailure as exc:
                state["mu"] = exc.mu
                raise
            delta = 1e-7 * abs(mu) + 1e-10
            if not A.shifted(mu - delta).is_positive_definite():
                state["mu"] = mu
                raise SpectralFailure(
                    f"converged to mu={mu:.8g}, which is not the lowest eigenvalue",
                    last_iterate=_profile(x, d, frame, grid), mu=mu,
                )

    values = _profile(x, d, frame, grid)
    norm = np.sqrt(integrate_radial(values**2, grid, params.N))
    values = values / norm
    if values[0] < 0:
        values = -values
    lap = ops.apply_laplacian(values)
    lap[-1] = 0.0
    eigenfunction = GridFunction(
        grid=grid, values=values, boundary_value=0.0, boundary_laplacian=0.0,
        residual=residual, meta={"laplacian": lap},
    )
    if residual > 1e-6 * abs(mu) + 1e-10:
        raise SpectralFailure(f"residual {residual:.3e} above the certified bound", last_iterate=values, mu=mu)

    logger.debug("navier eigenvalue mu=%.10g (residual %.2e, %d restarts)", mu, residual, state["restarts"])
    return EigenResult(
        mu=mu, eigenfunction=eigenfunction, residual=residual, mode_index=0,
        iterations=iterations, restarts=state["restarts"],
    )


def _lower_shift(A: SymmetricBand, state: Dict[str, Any]) -> float:
    """A shift strictly below the spectrum, found by doubling the distance"""
    base = state.get("mu", np.nan)
    base = 0.0 if not np.isfinite(base) else float(base)
    step = abs(base) + 1.0
    sigma = base - step
    while not A.shifted(sigma).is_positive_definite():
        step *= 2.0
        sigma = base - step
    return sigma


def _profile(x: np.ndarray, d: np.ndarray, frame: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """Standard-form vector back to nodal values, with h(1) = 0 appended"""
    g = x / np.sqrt(d)
    return np.concatenate((g / frame, [0.0])) if grid.size == g.size + 1 else g / frame


def mu1_of_solution(params: ProblemParams, lam: float, u: GridFunction) -> float:
    """First eigenvalue of the linearization at u: potential 2 lam / (1 - u)^3"""
    if u.sup() >= 1.0:
        raise EvaluationError("linearization needs sup u < 1")
    potential = 2.0 * lam / (1.0 - u.values) ** 3
    return navier_eigen_smallest(params, potential, grid=u.grid).mu


def stability_quadratic_form(params: ProblemParams, lam: float, u: GridFunction, phi: np.ndarray) -> float:
    """
    Discrete value of beta |Delta phi|^2 + tau |grad phi|^2 - 2 lam phi^2 / (1 - u)^3
    integrated against r^(N-1), for phi vanishing at r = 1
    """
    ops = radial_operators(u.grid, params.N)
    potential = 2.0 * lam / (1.0 - u.values) ** 3
    form = navier_form(ops, params.beta, params.tau, potential)
    g = ops.frame[:-1] * np.asarray(phi, dtype=float)[:-1]
    return float(g @ (form @ g))
