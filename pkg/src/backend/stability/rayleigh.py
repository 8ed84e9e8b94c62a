"""
Weighted Rayleigh quotients per spherical-harmonic mode

Second order: int (f'' + (N-1)/r f' - c_k f/r^2)^2 r^(N-1) (+ tau gradient)
First order:  int V (f'^2 + c_k f^2/r^2) r^(N-1) (+ optional boundary term)
both over int W f^2 r^(N-1), with c_k = k (N + k - 2). The minimum is the
lowest eigenvalue of a symmetric-definite banded pencil with lumped mass.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import sparse

from backend.calculus.grid import GridFunction, RadialGrid, make_grid
from backend.calculus.operators import RadialOperators, radial_operators
from backend.hardy_rellich.weights import RadialWeight
from backend.stability.pencil import SymmetricBand
from backend.utils.config import load_settings
from backend.utils.errors import ConfigurationError, EvaluationError, InvalidWeight

logger = logging.getLogger(__name__)

K_MAX = 3


@dataclass(frozen=True)
class NumeratorSpec:
    """Which quadratic form sits on top of the quotient"""

    order: int = 2
    beta: float = 1.0
    tau: float = 0.0
    face_weight: Optional[RadialWeight] = None
    free_boundary: bool = False
    boundary_coefficient: Optional[float] = None

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ConfigurationError(f"numerator order must be 1 or 2, got {self.order}")
        if self.order == 2 and (self.beta <= 0 or self.tau < 0):
            raise ConfigurationError("second-order numerator needs beta > 0 and tau >= 0")
        if self.free_boundary and self.order != 1:
            raise ConfigurationError("a free boundary value is only supported for first-order quotients")

    @classmethod
    def rellich(cls, beta: float = 1.0, tau: float = 0.0) -> "NumeratorSpec":
        return cls(order=2, beta=beta, tau=tau)

    @classmethod
    def hardy(cls, face_weight: Optional[RadialWeight] = None) -> "NumeratorSpec":
        return cls(order=1, face_weight=face_weight)

    @classmethod
    def hardy_with_boundary(cls, N: int) -> "NumeratorSpec":
        """int |x'|^2 r^(N-1) + (N-1) x(1)^2 with x(1) left free"""
        return cls(order=1, free_boundary=True, boundary_coefficient=float(N - 1))


@dataclass(frozen=True, eq=False)
class QuotientResult:
    quotient: float
    minimizer: GridFunction
    k: int
    grid: RadialGrid


def default_rayleigh_grid() -> RadialGrid:
    settings = load_settings()
    return make_grid(settings.rayleigh_grid_size, settings.rayleigh_r_min)


def mode_coefficient(N: int, k: int) -> int:
    """c_k = k (N + k - 2), the eigenvalue of -Delta on the sphere"""
    if k < 0:
        raise ConfigurationError(f"mode index must be non-negative, got {k}")
    return k * (N + k - 2)


def _samples(weight: RadialWeight, r: np.ndarray, label: str) -> np.ndarray:
    try:
        values = np.asarray(weight.evaluate(r), dtype=float)
    except EvaluationError as exc:
        raise InvalidWeight(f"{label} {weight.name} cannot be evaluated on the grid: {exc}") from exc
    if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
        raise InvalidWeight(f"{label} {weight.name} is not positive on the grid")
    return values


def _second_order_form(ops: RadialOperators, spec: NumeratorSpec, c_k: int) -> sparse.csr_matrix:
    K = ops.stiffness()
    d = ops.interior_volumes()
    r = ops.nodes[:-1]
    C = sparse.diags(c_k / r**2)
    D = sparse.diags(d)
    form = K @ sparse.diags(1.0 / d) @ K
    if c_k:
        form = form + K @ C + C @ K + C @ D @ C
    form = spec.beta * form
    if spec.tau:
        form = form + spec.tau * (K + D @ C)
    return form.tocsr()


def _first_order_form(ops: RadialOperators, spec: NumeratorSpec, c_k: int) -> sparse.csr_matrix:
    n = ops.size if spec.free_boundary else ops.size - 1
    r = ops.nodes[:n]
    d = ops.volumes[:n]
    if spec.face_weight is None:
        face, node = None, np.ones(n)
    else:
        face = _samples(spec.face_weight, ops.faces, "face weight")
        node = _samples(spec.face_weight, r, "face weight")
    K = ops.stiffness(face_weight=face, include_boundary=spec.free_boundary)
    form = K + sparse.diags(d * node * c_k / r**2)
    if spec.free_boundary:
        extra = np.zeros(n)
        coefficient = spec.boundary_coefficient if spec.boundary_coefficient is not None else ops.N - 1
        extra[-1] = coefficient
        form = form + sparse.diags(extra)
    return form.tocsr()


def minimize_quotient(
    N: int,
    k: int,
    numerator_spec: NumeratorSpec,
    weight: RadialWeight,
    grid: Optional[RadialGrid] = None,
) -> QuotientResult:
    """
    Lowest value of the mode-k quotient and its minimizer

    Args:
        N: dimension
        k: spherical-harmonic mode
        numerator_spec: quadratic form in the numerator
        weight: W in the denominator, positive on the grid
        grid: radial grid (settings default when omitted)

    Returns:
        QuotientResult with the minimizer normalized in L^2(W r^(N-1) dr)
    """
    grid = grid or default_rayleigh_grid()
    c_k = mode_coefficient(N, k)
    ops = radial_operators(grid, N)

    if numerator_spec.order == 2:
        form, bandwidth = _second_order_form(ops, numerator_spec, c_k), 2
    else:
        form, bandwidth = _first_order_form(ops, numerator_spec, c_k), 1

    n = form.shape[0]
    mass = ops.volumes[:n] * _samples(weight, grid.nodes[:n], "weight")
    if not np.all(np.isfinite(mass)) or np.any(mass <= 0.0):
        raise InvalidWeight(f"denominator for {weight.name} is not positive definite")

    value, vector = SymmetricBand.standard_form(form, mass, bandwidth).lowest()
    g = vector / np.sqrt(mass)
    f = g / ops.frame[:n]
    if n < grid.size:
        f = np.concatenate((f, [0.0]))
    if f[np.argmax(np.abs(f))] < 0:
        f = -f
    logger.debug("mode %d quotient for %s (N=%d): %.10g", k, weight.name, N, value)
    minimizer = GridFunction(grid=grid, values=f, boundary_value=None if numerator_spec.free_boundary else 0.0)
    return QuotientResult(quotient=float(value), minimizer=minimizer, k=k, grid=grid)


def rayleigh_min_mode(
    N: int,
    k: int,
    numerator_spec: NumeratorSpec,
    weight: RadialWeight,
    grid: Optional[RadialGrid] = None,
) -> float:
    """Minimal mode-k quotient"""
    return minimize_quotient(N, k, numerator_spec, weight, grid).quotient


def mode_sweep(
    N: int,
    numerator_spec: NumeratorSpec,
    weight: RadialWeight,
    grid: Optional[RadialGrid] = None,
    k_max: int = K_MAX,
) -> List[float]:
    """Quotients for k = 0..k_max"""
    grid = grid or default_rayleigh_grid()
    return [rayleigh_min_mode(N, k, numerator_spec, weight, grid) for k in range(k_max + 1)]


def hardy_quotient(
    N: int,
    weight: RadialWeight,
    face_weight: Optional[RadialWeight] = None,
    grid: Optional[RadialGrid] = None,
    boundary_term: bool = False,
) -> float:
    """Radial first-order quotient int V f'^2 / int W f^2, optionally with the boundary term"""
    if boundary_term:
        if face_weight is not None:
            raise ConfigurationError("the boundary-term quotient has no face weight")
        spec = NumeratorSpec.hardy_with_boundary(N)
    else:
        spec = NumeratorSpec.hardy(face_weight)
    return rayleigh_min_mode(N, 0, spec, weight, grid)
