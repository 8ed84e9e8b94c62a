"""
Dimension routing for the sub-solution certificates
Each case fixes the profile exponent, the constants and the weight
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

import sympy as sp

from backend.subsolutions.profiles import TABLE_ONE, H_N, SubSolutionSpec, coefficients, lambda_bar
from backend.utils.errors import ConfigurationError


class CertificationCase(Enum):
    """Certificate families"""
    DIMENSION_NINE = "dimension_nine"
    TABLE_ROWS = "table_rows"
    HALF_CONSTANT = "half_constant"
    LARGE_DIMENSION = "large_dimension"


@dataclass(frozen=True)
class CaseParameters:
    m: sp.Rational
    lambda_prime: sp.Rational
    sigma: sp.Rational
    weight: str


def _dimension_nine(N: int) -> CaseParameters:
    lam, sigma = TABLE_ONE[N]
    return CaseParameters(sp.Rational(14, 5), sp.Rational(lam), sp.Rational(sigma), "improved_32")


def _table_rows(N: int) -> CaseParameters:
    if N not in TABLE_ONE:
        raise ConfigurationError(f"no table row for N={N}")
    lam, sigma = TABLE_ONE[N]
    return CaseParameters(sp.Rational(3), sp.Rational(lam), sp.Rational(sigma), "improved_31")


def _half_constant(N: int) -> CaseParameters:
    half = H_N(N) / 2
    return CaseParameters(sp.Rational(3), half - 1, half, "classical")


def _large_dimension(N: int) -> CaseParameters:
    return CaseParameters(sp.Rational(2), 27 * lambda_bar(N), H_N(N) / 2, "classical")


class CaseRouter:
    """Routes a dimension to its certificate family"""

    def __init__(self):
        self.builders = {
            CertificationCase.DIMENSION_NINE: _dimension_nine,
            CertificationCase.TABLE_ROWS: _table_rows,
            CertificationCase.HALF_CONSTANT: _half_constant,
            CertificationCase.LARGE_DIMENSION: _large_dimension,
        }

    def route(self, N: int) -> CertificationCase:
        """Determine which family certifies N"""
        if N < 9:
            raise ConfigurationError(f"certificates exist for N >= 9 only, got N={N}")
        if N == 9:
            return CertificationCase.DIMENSION_NINE
        if N <= 15:
            return CertificationCase.TABLE_ROWS
        if N <= 30:
            return CertificationCase.HALF_CONSTANT
        return CertificationCase.LARGE_DIMENSION

    def parameters(self, N: int, case: Optional[CertificationCase] = None) -> CaseParameters:
        case = case or self.route(N)
        return self.builders[case](N)

    def build_spec(self, N: int, case: Optional[CertificationCase] = None) -> SubSolutionSpec:
        p = self.parameters(N, case)
        return SubSolutionSpec.build(N, p.m, p.lambda_prime, p.sigma, p.weight)

    def boundary_cases(self, N: int) -> List[CertificationCase]:
        """Both families at the edge between half-constant and large dimensions"""
        if N in (30, 31):
            return [CertificationCase.HALF_CONSTANT, CertificationCase.LARGE_DIMENSION]
        return [self.route(N)]


def large_dimension_chain(N: int) -> Dict[str, object]:
    """a_{N,2}, a^3 lambda_bar <= 27 lambda_bar < H_N / 2 with a < 3"""
    a, _ = coefficients(N, 2)
    lam = lambda_bar(N)
    half = H_N(N) / 2
    return {
        "a": str(a),
        "a_cubed_lambda_bar": float(a**3 * lam),
        "27_lambda_bar": float(27 * lam),
        "half_H_N": float(half),
        "a_below_3": bool(a < 3),
        "chain_holds": bool(a < 3 and 27 * lam < half),
    }
