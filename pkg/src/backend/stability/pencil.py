"""
Symmetric banded matrices: lowest eigenpairs, definiteness tests and
Jacobi-scaled shifted solves
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg, sparse

from backend.calculus.operators import to_upper_band
from backend.utils.errors import SpectralFailure

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SymmetricBand:
    """Symmetric matrix in upper banded storage (LAPACK layout)"""

    band: np.ndarray

    @classmethod
    def from_sparse(cls, matrix, bandwidth: int) -> "SymmetricBand":
        return cls(to_upper_band(matrix, bandwidth))

    @classmethod
    def standard_form(cls, stiffness, mass: np.ndarray, bandwidth: int) -> "SymmetricBand":
        """mass^(-1/2) stiffness mass^(-1/2) for a diagonal (lumped) mass"""
        scale = sparse.diags(1.0 / np.sqrt(mass))
        return cls.from_sparse(scale @ stiffness @ scale, bandwidth)

    @property
    def bandwidth(self) -> int:
        return self.band.shape[0] - 1

    @property
    def size(self) -> int:
        return self.band.shape[1]

    @property
    def diagonal(self) -> np.ndarray:
        return self.band[-1]

    def shifted(self, sigma: float) -> "SymmetricBand":
        band = self.band.copy()
        band[-1] -= sigma
        return SymmetricBand(band)

    def _jacobi(self) -> np.ndarray:
        d = np.abs(self.diagonal)
        d[d == 0.0] = 1.0
        return 1.0 / np.sqrt(d)

    def _scaled(self, s: np.ndarray) -> np.ndarray:
        u = self.bandwidth
        band = self.band.copy()
        for k in range(u + 1):
            band[u - k, k:] *= s[k:] * s[: self.size - k]
        return band

    def is_positive_definite(self) -> bool:
        """Cholesky test on the Jacobi-scaled matrix"""
        try:
            linalg.cholesky_banded(self._scaled(self._jacobi()), lower=False)
        except linalg.LinAlgError:
            return False
        return True

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve A z = rhs with symmetric Jacobi scaling and partial pivoting"""
        u = self.bandwidth
        s = self._jacobi()
        upper = self._scaled(s)
        general = np.zeros((2 * u + 1, self.size))
        general[: u + 1] = upper
        for k in range(1, u + 1):
            general[u + k, : self.size - k] = upper[u - k, k:]
        z = linalg.solve_banded((u, u), general, s * rhs)
        return s * z

    def matvec(self, x: np.ndarray) -> np.ndarray:
        u = self.bandwidth
        out = self.diagonal * x
        for k in range(1, u + 1):
            off = self.band[u - k, k:]
            out[:-k] += off * x[k:]
            out[k:] += off * x[:-k]
        return out

    def lowest(self) -> Tuple[float, np.ndarray]:
        """Smallest eigenvalue and unit eigenvector"""
        try:
            values, vectors = linalg.eig_banded(
                self.band, lower=False, select="i", select_range=(0, 0)
            )
        except (linalg.LinAlgError, ValueError) as exc:
            raise SpectralFailure(f"banded eigensolver failed: {exc}") from exc
        return float(values[0]), vectors[:, 0]
