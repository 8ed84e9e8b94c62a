"""
Graded radial grids, grid functions and weighted radial quadrature
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Optional, Union

import numpy as np

from backend.utils.errors import ConfigurationError, EvaluationError

logger = logging.getLogger(__name__)

MIN_NODES = 16


class GridMode(Enum):
    """Node placement"""
    GEOMETRIC = "geometric"
    POWER = "power"


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes r_min = r_1 < ... < r_M = 1; r = 0 is never a node"""

    nodes: np.ndarray
    mode: GridMode
    r_min: float
    q: float = 2.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ConfigurationError("grid needs a one-dimensional array of nodes")
        if nodes[0] <= 0.0 or nodes[-1] != 1.0 or np.any(np.diff(nodes) <= 0.0):
            raise ConfigurationError("grid nodes must increase strictly from r_min > 0 to 1")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    def descriptor(self) -> Dict[str, Any]:
        """Plain description recorded in reports"""
        info = {"mode": self.mode.value, "nodes": self.size, "r_min": float(self.nodes[0])}
        if self.mode is GridMode.POWER:
            info["q"] = self.q
        else:
            info["ratio"] = float(self.nodes[1] / self.nodes[0])
        return info


def make_grid(
    M: int,
    r_min: float,
    mode: Union[GridMode, str] = GridMode.GEOMETRIC,
    q: float = 2.0,
    min_nodes: int = MIN_NODES,
) -> RadialGrid:
    """
    Build a graded grid on [r_min, 1]

    Args:
        M: node count
        r_min: smallest node (geometric) or lower bound for the first node (power)
        mode: geometric or power grading
        q: power-grading exponent, r_i = (i/M)^q
        min_nodes: smallest accepted M

    Returns:
        RadialGrid
    """
    mode = GridMode(mode)
    if M < min_nodes:
        raise ConfigurationError(f"grid needs at least {min_nodes} nodes, got {M}")
    if not 0.0 < r_min < 1.0:
        raise ConfigurationError(f"r_min must lie in (0, 1), got {r_min}")

    if mode is GridMode.GEOMETRIC:
        nodes = np.geomspace(r_min, 1.0, M)
        nodes[0] = r_min
    else:
        if q <= 0.0:
            raise ConfigurationError(f"power grading needs q > 0, got {q}")
        nodes = (np.arange(1, M + 1, dtype=float) / M) ** q
        if nodes[0] < r_min * (1.0 - 1e-12):
            raise ConfigurationError(
                f"first power-graded node {nodes[0]:.3g} lies below r_min={r_min:.3g}; "
                f"use fewer nodes or a smaller q"
            )
    nodes[-1] = 1.0
    return RadialGrid(nodes=nodes, mode=mode, r_min=float(nodes[0]), q=q)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a radial profile with its Navier boundary data"""

    grid: RadialGrid
    values: np.ndarray
    boundary_value: Optional[float] = None
    boundary_laplacian: Optional[float] = None
    residual: Optional[float] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ConfigurationError(
                f"grid function has {values.size} values for {self.grid.size} nodes"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def sample(cls, grid: RadialGrid, f: Callable[[np.ndarray], np.ndarray], **kwargs) -> "GridFunction":
        values = np.broadcast_to(np.asarray(f(grid.nodes), dtype=float), (grid.size,))
        return cls(grid=grid, values=values, **kwargs)

    @classmethod
    def constant(cls, grid: RadialGrid, value: float, **kwargs) -> "GridFunction":
        return cls(grid=grid, values=np.full(grid.size, float(value)), **kwargs)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def sup(self) -> float:
        return float(np.max(self.values))

    def boundary_mismatch(self) -> float:
        """|u(r_M) - alpha|, zero when no boundary value is attached"""
        if self.boundary_value is None:
            return 0.0
        return abs(float(self.values[-1]) - self.boundary_value)


def integrate_radial(
    f: Union[GridFunction, Callable[[np.ndarray], np.ndarray], np.ndarray],
    grid: RadialGrid,
    N: int,
) -> float:
    """
    Trapezoidal value of the integral of f r^(N-1) over [r_min, 1]

    The surface measure of the unit sphere is left out; it cancels in every
    quotient built from these integrals.
    """
    r = grid.nodes
    if isinstance(f, GridFunction):
        samples = f.values
    elif callable(f):
        samples = np.broadcast_to(np.asarray(f(r), dtype=float), r.shape)
    else:
        samples = np.broadcast_to(np.asarray(f, dtype=float), r.shape)

    if not np.all(np.isfinite(samples)):
        raise EvaluationError("non-finite samples in radial integrand")

    return float(np.trapezoid(samples * r ** (N - 1), r))
