"""
Rayleigh-quotient verification of Hardy-Rellich weights

A weight passes when every mode quotient int (Delta f)^2 / int W f^2 for
k = 0..k_max stays above 1 - tolerance. The first-order inequalities the
second-order weights are built from are checked alongside.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from backend.calculus.grid import GridFunction, RadialGrid
from backend.hardy_rellich.bessel_pair import ODESolution, bessel_pair_test, constituent_pairs
from backend.hardy_rellich.weights import RadialWeight, weight_hardy_28
from backend.stability.rayleigh import (
    K_MAX,
    NumeratorSpec,
    default_rayleigh_grid,
    hardy_quotient,
    minimize_quotient,
)
from backend.utils.errors import ConfigurationError, WeightVerificationError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 0.02


@dataclass(frozen=True, eq=False)
class WeightVerification:
    """Mode quotients and first-order checks for one weight"""

    N: int
    weight: RadialWeight
    quotients: List[float]
    tolerance: float
    grid: RadialGrid
    hardy_quotient: Optional[float] = None
    boundary_quotient: Optional[float] = None
    worst_minimizer: Optional[GridFunction] = None

    @property
    def threshold(self) -> float:
        return 1.0 - self.tolerance

    @property
    def min_quotient(self) -> float:
        return min(self.quotients)

    @property
    def first_order_passed(self) -> bool:
        checks = [q for q in (self.hardy_quotient, self.boundary_quotient) if q is not None]
        return all(q >= self.threshold for q in checks)

    @property
    def passed(self) -> bool:
        return self.min_quotient >= self.threshold and self.first_order_passed

    def verified_weight(self) -> RadialWeight:
        """The weight marked as verified by this route"""
        self.raise_for_failure()
        return self.weight.mark_verified("rayleigh")

    def raise_for_failure(self) -> None:
        if self.passed:
            return
        if self.min_quotient < self.threshold:
            k = self.quotients.index(self.min_quotient)
            raise WeightVerificationError(
                f"{self.weight.name} (N={self.N}): mode {k} quotient {self.min_quotient:.6f} "
                f"below {self.threshold:.4f}",
                minimizer=self.worst_minimizer,
            )
        raise WeightVerificationError(
            f"first-order inequality below {self.threshold:.4f} for N={self.N} "
            f"(hardy={self.hardy_quotient}, boundary={self.boundary_quotient})"
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "weight": self.weight.name,
            "quotients": {str(k): q for k, q in enumerate(self.quotients)},
            "min_quotient": self.min_quotient,
            "hardy_quotient": self.hardy_quotient,
            "boundary_quotient": self.boundary_quotient,
            "tolerance": self.tolerance,
            "threshold": self.threshold,
            "passed": self.passed,
            "grid": self.grid.descriptor(),
        }


def verify_weight_rayleigh(
    N: int,
    weight: RadialWeight,
    k_max: int = K_MAX,
    grid: Optional[RadialGrid] = None,
    tolerance: float = DEFAULT_TOLERANCE,
    first_order: bool = True,
) -> WeightVerification:
    """
    Check int (Delta f)^2 >= int W f^2 mode by mode on a discrete grid

    Args:
        N: dimension
        weight: candidate Hardy-Rellich weight
        k_max: highest spherical-harmonic mode
        grid: radial grid (settings default when omitted)
        tolerance: accepted relative shortfall of the quotient
        first_order: also check the first-order Hardy inequality with and
            without the boundary term

    Returns:
        WeightVerification (call raise_for_failure to turn a failure into an error)
    """
    if weight.N != N:
        raise ConfigurationError(f"weight {weight.name} belongs to N={weight.N}, not {N}")
    if k_max < 0:
        raise ConfigurationError(f"k_max must be non-negative, got {k_max}")
    grid = grid or default_rayleigh_grid()

    spec = NumeratorSpec.rellich()
    results = [minimize_quotient(N, k, spec, weight, grid) for k in range(k_max + 1)]
    quotients = [res.quotient for res in results]
    worst = min(results, key=lambda res: res.quotient)

    hardy = boundary = None
    if first_order and N >= 3:
        hardy_weight = weight_hardy_28(N)
        hardy = hardy_quotient(N, hardy_weight, grid=grid)
        boundary = hardy_quotient(N, hardy_weight, grid=grid, boundary_term=True)

    verification = WeightVerification(
        N=N,
        weight=weight,
        quotients=quotients,
        tolerance=tolerance,
        grid=grid,
        hardy_quotient=hardy,
        boundary_quotient=boundary,
        worst_minimizer=worst.minimizer,
    )
    level = logging.INFO if verification.passed else logging.WARNING
    logger.log(level, "%s N=%d: min quotient %.6f (passed=%s)", weight.name, N, verification.min_quotient,
               verification.passed)
    return verification


def verify_constituent_pairs(weight_name: str, N: int) -> List[Dict[str, Any]]:
    """ODE positivity verdicts for the first-order pairs behind a weight"""
    out = []
    for pair in constituent_pairs(weight_name, N):
        solution: ODESolution = bessel_pair_test(pair)
        out.append(solution.to_dict())
    return out
