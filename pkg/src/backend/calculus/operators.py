"""
Finite-volume radial operators on graded grids

Control volumes sit between node midpoints; the first volume reaches down to
r = 0 where the face area vanishes, which enforces u'(0) = 0 without a ghost
value. Volumes, face conductances and the symmetric stiffness are stored
divided by r_i^(N-1) (or its geometric mean across a face) so that large
dimensions on grids reaching 1e-8 never underflow.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import sparse

from backend.calculus.grid import RadialGrid
from backend.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RadialOperators:
    """Scaled finite-volume data for one (grid, N) pair"""

    grid: RadialGrid
    N: int
    volumes: np.ndarray     # |V_i| / r_i^(N-1); the last entry is the half cell at r = 1
    upper: np.ndarray       # (m_{i+1/2}/r_i)^(N-1) / h_i, i = 0..M-2
    lower: np.ndarray       # (m_{i-1/2}/r_i)^(N-1) / h_{i-1}, i = 1..M-1
    coupling: np.ndarray    # symmetric off-diagonal m^(N-1) / (h sqrt(r_i r_{i+1})^(N-1))
    faces: np.ndarray       # midpoints m_{i+1/2}
    frame: np.ndarray       # r_i^((N-1)/2), maps scaled vectors back to profiles

    @property
    def size(self) -> int:
        return self.grid.size

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def _laplacian_diagonals(self):
        d = self.volumes
        main = np.empty(self.size)
        main[:-1] = -(self.upper + np.concatenate(([0.0], self.lower[:-1]))) / d[:-1]
        main[-1] = 0.0
        up = self.upper / d[:-1]
        low = np.concatenate((self.lower[:-1] / d[1:-1], [0.0]))
        return low, main, up

    def laplacian(self) -> sparse.csr_matrix:
        """M x M radial Laplacian; the last row is the Dirichlet row u(1)"""
        low, main, up = self._laplacian_diagonals()
        main[-1] = 1.0
        return sparse.diags([low, main, up], offsets=[-1, 0, 1], format="csr")

    def dirichlet_system(self, scale: float, shift: float) -> sparse.csc_matrix:
        """-scale * L + shift * I on interior rows, identity on the boundary row"""
        low, main, up = self._laplacian_diagonals()
        main = -scale * main + shift
        main[-1] = 1.0
        return sparse.diags([-scale * low, main, -scale * up], offsets=[-1, 0, 1], format="csc")

    def apply_laplacian(self, values: np.ndarray) -> np.ndarray:
        """Interior rows of L applied to values; the boundary entry is returned as NaN"""
        low, main, up = self._laplacian_diagonals()
        out = main * values
        out[:-1] += up * values[1:]
        out[1:] += low * values[:-1]
        out[-1] = np.nan
        return out

    def stiffness(self, face_weight: Optional[np.ndarray] = None, include_boundary: bool = False) -> sparse.csr_matrix:
        """
        Scaled symmetric Dirichlet-form matrix K = -S

        g^T K g equals sum over faces of V(m) m^(N-1) (f_{i+1} - f_i)^2 / h
        for g = frame * f. Without the boundary node the matrix acts on the
        interior unknowns with f(1) = 0.
        """
        weight = np.ones(self.size - 1) if face_weight is None else np.asarray(face_weight, dtype=float)
        up = weight * self.upper
        low = np.concatenate(([0.0], weight * self.lower))
        main = np.concatenate((up, [0.0])) + low
        off = -weight * self.coupling
        K = sparse.diags([off, main, off], offsets=[-1, 0, 1], format="csr")
        if include_boundary:
            return K
        n = self.size - 1
        return K[:n, :n].tocsr()

    def interior_volumes(self) -> np.ndarray:
        return self.volumes[:-1]


@lru_cache(maxsize=32)
def radial_operators(grid: RadialGrid, N: int) -> RadialOperators:
    """Assemble the scaled finite-volume data (cached per grid object)"""
    if N < 2:
        raise ConfigurationError(f"dimension must be at least 2, got {N}")
    r = grid.nodes
    h = np.diff(r)
    m = 0.5 * (r[:-1] + r[1:])
    left = np.concatenate(([0.0], m))
    right = np.concatenate((m, [1.0]))

    volumes = r * ((right / r) ** N - (left / r) ** N) / N
    upper = (m / r[:-1]) ** (N - 1) / h
    lower = (m / r[1:]) ** (N - 1) / h
    coupling = (m / np.sqrt(r[:-1] * r[1:])) ** (N - 1) / h
    frame = r ** (0.5 * (N - 1))

    for name, arr in (("volumes", volumes), ("upper", upper), ("lower", lower), ("coupling", coupling)):
        arr.setflags(write=False)
    logger.debug("assembled radial operators N=%d on %d nodes", N, grid.size)
    return RadialOperators(
        grid=grid, N=N, volumes=volumes, upper=upper, lower=lower,
        coupling=coupling, faces=m, frame=frame,
    )


def discrete_laplacian(grid: RadialGrid, N: int) -> sparse.csr_matrix:
    """Banded radial Laplacian with regularity at the inner end and a Dirichlet row at r = 1"""
    return radial_operators(grid, N).laplacian()


def to_upper_band(matrix, bandwidth: int) -> np.ndarray:
    """Upper banded storage a_band[bandwidth + i - j, j] = a[i, j] for symmetric matrices"""
    A = sparse.dia_matrix(matrix)
    n = A.shape[0]
    band = np.zeros((bandwidth + 1, n))
    for k in range(bandwidth + 1):
        diagonal = A.diagonal(k)
        band[bandwidth - k, k:] = diagonal
    return band


def to_general_band(matrix, lower: int, upper: int) -> np.ndarray:
    """Banded storage for scipy.linalg.solve_banded"""
    A = sparse.dia_matrix(matrix)
    n = A.shape[0]
    band = np.zeros((lower + upper + 1, n))
    for k in range(-lower, upper + 1):
        diagonal = A.diagonal(k)
        if k >= 0:
            band[upper - k, k:] = diagonal
        else:
            band[upper - k, : n + k] = diagonal
    return band
