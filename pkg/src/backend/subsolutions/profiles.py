"""
Singular sub-solution profiles w_m = 1 - a r^(4/3) + b r^m and the
dimension constants they are compared against
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import sympy as sp

from backend.calculus.power_sum import Number, PowerSum, as_rational, power_laplacian
from backend.hardy_rellich.weights import WEIGHT_ALIASES, WEIGHT_BUILDERS, hardy_rellich_constant
from backend.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

FOUR_THIRDS = sp.Rational(4, 3)

# certified (lambda', sigma) pairs for beta = 1, tau = 0
TABLE_ONE: Dict[int, Tuple[int, int]] = {
    9: (249, 251),
    10: (320, 367),
    11: (405, 574),
    12: (502, 851),
    13: (610, 1211),
    14: (730, 1668),
    15: (860, 2235),
}


def _require_dimension(N: int, low: int = 5) -> None:
    if not isinstance(N, int) or N < low:
        raise ConfigurationError(f"dimension must be an integer >= {low}, got {N!r}")


def coefficients(N: int, m: Number) -> Tuple[sp.Rational, sp.Rational]:
    """
    a = m (N + m - 2) / D and b = (4/3)(N - 2/3) / D with
    D = m (N + m - 2) - (4/3)(N - 2/3); a - b = 1
    """
    _require_dimension(N, 2)
    m = as_rational(m)
    if m <= FOUR_THIRDS:
        raise ConfigurationError(f"exponent m must exceed 4/3, got {m}")
    top = m * (N + m - 2)
    bottom = FOUR_THIRDS * (N - sp.Rational(2, 3))
    D = top - bottom
    if D <= 0:
        raise ConfigurationError(f"(N={N}, m={m}) gives a non-positive denominator {D}")
    return top / D, bottom / D


def lambda_bar(N: int) -> sp.Rational:
    """8 (N - 2/3)(N - 8/3) / 9, the value making 1 - r^(4/3) an exact solution"""
    _require_dimension(N)
    return sp.Rational(8, 9) * (N - sp.Rational(2, 3)) * (N - sp.Rational(8, 3))


def H_N(N: int) -> sp.Rational:
    _require_dimension(N)
    return hardy_rellich_constant(N)


def regularity_criterion(N: int) -> bool:
    """2 lambda_bar <= H_N; false means the extremal solution is regular"""
    return bool(2 * lambda_bar(N) <= H_N(N))


def singular_profile() -> PowerSum:
    """1 - r^(4/3)"""
    return PowerSum.of((1, 0), (-1, FOUR_THIRDS))


def subsolution_profile(N: int, m: Number) -> PowerSum:
    a, b = coefficients(N, m)
    return PowerSum.of((1, 0), (-a, FOUR_THIRDS), (b, as_rational(m)))


def canonical_weight_name(name: str) -> str:
    key = WEIGHT_ALIASES.get(name, name)
    if key not in WEIGHT_BUILDERS:
        raise ConfigurationError(f"unknown weight '{name}', choose from {sorted(WEIGHT_BUILDERS)}")
    return key


@dataclass(frozen=True)
class SubSolutionSpec:
    """A candidate sub-solution with the constants it should certify"""

    N: int
    m: sp.Rational
    a: sp.Rational
    b: sp.Rational
    profile: PowerSum
    lambda_prime: sp.Rational
    sigma: sp.Rational
    weight_choice: str

    @classmethod
    def build(cls, N: int, m: Number, lambda_prime: Number, sigma: Number, weight_choice: str) -> "SubSolutionSpec":
        a, b = coefficients(N, m)
        profile = subsolution_profile(N, m)
        spec = cls(
            N=N,
            m=as_rational(m),
            a=a,
            b=b,
            profile=profile,
            lambda_prime=as_rational(lambda_prime),
            sigma=as_rational(sigma),
            weight_choice=canonical_weight_name(weight_choice),
        )
        spec.check_invariants()
        return spec

    def check_invariants(self) -> None:
        """Exact boundary identities of the profile"""
        if self.a - self.b != 1:
            raise ConfigurationError(f"a - b = {self.a - self.b}, expected 1")
        if self.profile.value_at_one() != 0:
            raise ConfigurationError("profile does not vanish at r = 1")
        if power_laplacian(self.profile, self.N).value_at_one() != 0:
            raise ConfigurationError("Laplacian of the profile does not vanish at r = 1")

    def one_minus(self) -> PowerSum:
        """1 - w = a r^(4/3) - b r^m"""
        return 1 - self.profile

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "m": str(self.m),
            "a": str(self.a),
            "b": str(self.b),
            "profile": str(self.profile),
            "lambda_prime": str(self.lambda_prime),
            "sigma": str(self.sigma),
            "weight": self.weight_choice,
        }
