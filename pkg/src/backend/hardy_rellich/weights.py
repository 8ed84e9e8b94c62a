"""
Radial weights for Hardy and Hardy-Rellich inequalities
A weight is an exact quotient of power sums with its behaviour at both
endpoints, positivity checked when it is built
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import sympy as sp

from backend.calculus.power_sum import Number, PowerSum, as_rational, leading_term
from backend.utils.errors import ConfigurationError, WeightConstructionError

logger = logging.getLogger(__name__)

R = PowerSum.monomial(1, 1)
R2 = PowerSum.monomial(1, 2)

# sampling used for the construction-time sign checks
_CHECK_NODES = np.geomspace(1e-8, 1.0 - 1e-9, 4000)


@dataclass(frozen=True)
class Expansion:
    """W(r) = coeff r^exponent (1 + correction r^gap + ...) as r -> 0"""

    coeff: sp.Rational
    exponent: sp.Rational
    correction: sp.Rational = sp.Rational(0)
    gap: Optional[sp.Rational] = None


def factor_expansion(factors: List[Tuple[PowerSum, int]]) -> Expansion:
    coeff, exponent = sp.Rational(1), sp.Rational(0)
    corrections: Dict[sp.Rational, sp.Rational] = {}
    for ps, power in factors:
        lead = ps.leading()
        if lead is None:
            raise ConfigurationError("zero factor in a weight")
        c0, e0 = lead
        coeff *= c0 ** power
        exponent += e0 * power
        if len(ps) > 1:
            c1, e1 = ps.terms[1]
            corrections[e1 - e0] = corrections.get(e1 - e0, sp.Rational(0)) + power * c1 / c0
    if not corrections:
        return Expansion(coeff, exponent)
    gap = min(corrections)
    return Expansion(coeff, exponent, corrections[gap], gap)


def zero_order_at_one(ps: PowerSum) -> int:
    """Multiplicity of the zero of ps at r = 1, 0 when ps(1) != 0"""
    order = 0
    while ps and ps.value_at_one() == 0:
        ps = ps.derivative()
        order += 1
    return order


@dataclass(frozen=True, eq=False)
class RadialWeight:
    """W(r) = numerator / prod(denominators) with verification status"""

    name: str
    N: int
    numerator: PowerSum
    denominators: Tuple[PowerSum, ...] = ()
    verified: bool = False
    provenance: Tuple[str, ...] = ()

    def __call__(self, r):
        return self.evaluate(r)

    def evaluate(self, r):
        value = self.numerator.evaluate(r)
        for den in self.denominators:
            value = value / den.evaluate(r)
        return value

    def factors(self) -> List[Tuple[PowerSum, int]]:
        return [(self.numerator, 1)] + [(den, -1) for den in self.denominators]

    def expansion(self) -> Expansion:
        """Exact two-term behaviour at r -> 0"""
        return factor_expansion(self.factors())

    @property
    def expr(self) -> sp.Expr:
        return self.numerator.expr / sp.Mul(*(den.expr for den in self.denominators))

    def leading(self) -> Tuple[sp.Rational, sp.Rational]:
        """(coefficient, exponent) of the dominant term at r -> 0"""
        return leading_term(self.expr)

    def pole_order_at_one(self) -> int:
        """Order of the zeros of the denominators at r = 1 minus that of the numerator"""
        return sum(zero_order_at_one(den) for den in self.denominators) - zero_order_at_one(self.numerator)

    @property
    def singular_at_one(self) -> bool:
        return self.pole_order_at_one() > 0

    def log_derivative(self, r):
        """W'(r)/W(r)"""
        value = self.numerator.derivative().evaluate(r) / self.numerator.evaluate(r)
        for den in self.denominators:
            value = value - den.derivative().evaluate(r) / den.evaluate(r)
        return value

    def scalar_functions(self) -> Tuple[Callable[[float], float], Callable[[float], float]]:
        """Fast closures (W, r W'/W) for ODE right-hand sides"""
        parts = [(f.scalar_function(), f.derivative().scalar_function(), power) for f, power in self.factors()]

        def value(r: float) -> float:
            out = 1.0
            for f, _, power in parts:
                out = out * f(r) if power > 0 else out / f(r)
            return out

        def log_slope(r: float) -> float:
            return r * sum(power * df(r) / f(r) for f, df, power in parts)

        return value, log_slope

    def scaled(self, factor: Number) -> "RadialWeight":
        """factor * W; verification does not carry over"""
        c = as_rational(factor)
        return RadialWeight(
            name=f"{c}*{self.name}" if c != 1 else self.name,
            N=self.N,
            numerator=self.numerator * c,
            denominators=self.denominators,
        )

    def mark_verified(self, route: str) -> "RadialWeight":
        routes = tuple(sorted(set(self.provenance) | {route}))
        return dataclasses.replace(self, verified=True, provenance=routes)

    def to_dict(self) -> Dict[str, Any]:
        coeff, exponent = self.leading()
        return {
            "name": self.name,
            "N": self.N,
            "numerator": self.numerator.to_list(),
            "denominators": [den.to_list() for den in self.denominators],
            "leading_at_zero": {"coeff": str(coeff), "exponent": str(exponent)},
            "pole_order_at_one": self.pole_order_at_one(),
            "verified": self.verified,
            "provenance": list(self.provenance),
        }


def build_weight(
    name: str,
    N: int,
    numerator: PowerSum,
    denominators: Tuple[PowerSum, ...] = (),
) -> RadialWeight:
    """Assemble a weight and check its sign on (0, 1)"""
    weight = RadialWeight(name=name, N=N, numerator=numerator, denominators=tuple(denominators))
    coeff, _ = weight.leading()
    if coeff <= 0:
        raise WeightConstructionError(f"{name} (N={N}) is not positive near r = 0")

    values = weight.evaluate(_CHECK_NODES)
    bad = np.flatnonzero(~np.isfinite(values) | (values <= 0))
    if bad.size:
        r_bad = float(_CHECK_NODES[bad[0]])
        raise WeightConstructionError(f"{name} (N={N}) fails to be positive at r={r_bad:.6g}")

    logger.debug("built weight %s for N=%d", name, N)
    return weight


# ==================== BUILDING BLOCKS ====================

def hardy_rellich_constant(N: int) -> sp.Rational:
    """N^2 (N-4)^2 / 16"""
    return sp.Rational(N * N * (N - 4) ** 2, 16)


def boundary_alpha(N: int) -> sp.Rational:
    return sp.Rational(N, 2 * (N - 1))


def q_profile(N: int) -> PowerSum:
    """r^2 - alpha r^(N/2 + 1)"""
    return PowerSum.of((1, 2), (-boundary_alpha(N), sp.Rational(N, 2) + 1))


def t_profile(N: int) -> PowerSum:
    """r^2 - r^(N/2)"""
    return PowerSum.of((1, 2), (-1, sp.Rational(N, 2)))


def phi_profile(N: int) -> PowerSum:
    """r^(2 - N/2) + 9 r^-2 + 10 r - 20"""
    return PowerSum.of((1, 2 - sp.Rational(N, 2)), (9, -2), (10, 1), (-20, 0))


def k_numerator(N: int) -> PowerSum:
    """-(phi'' + (N-3)/r phi'); K = k_numerator / phi"""
    phi = phi_profile(N)
    first = phi.derivative()
    return -(first.derivative() + PowerSum.monomial(N - 3, -1) * first)


def _require(N: int, low: int, name: str) -> None:
    if N < low:
        raise ConfigurationError(f"{name} needs N >= {low}, got N={N}")


# ==================== WEIGHTS ====================

def weight_classical(N: int) -> RadialWeight:
    """H_N / r^4"""
    _require(N, 5, "classical weight")
    return build_weight("classical", N, PowerSum.monomial(hardy_rellich_constant(N), -4))


def weight_improved_31(N: int) -> RadialWeight:
    """A/(Q T) + B/(r^2 T) with A = (N-2)^2 (N-4)^2 / 16, B = (N-1)(N-4)^2 / 4"""
    _require(N, 5, "improved_31 weight")
    A = sp.Rational((N - 2) ** 2 * (N - 4) ** 2, 16)
    B = sp.Rational((N - 1) * (N - 4) ** 2, 4)
    Q, T = q_profile(N), t_profile(N)
    return build_weight("improved_31", N, A * R2 + B * Q, (R2, Q, T))


def weight_improved_32(N: int) -> RadialWeight:
    """K ((N-2)^2 / (4 Q) + (N-1) / r^2) with K built from phi"""
    _require(N, 7, "improved_32 weight")
    phi = phi_profile(N)
    k_num = k_numerator(N)

    phi_values = phi.evaluate(_CHECK_NODES)
    if np.any(phi_values <= 0) or phi.derivative().value_at_one() >= 0:
        raise WeightConstructionError(f"phi is not positive on (0, 1) for N={N}")
    k_values = k_num.evaluate(_CHECK_NODES)
    if np.any(k_values <= 0):
        r_bad = float(_CHECK_NODES[np.flatnonzero(k_values <= 0)[0]])
        raise WeightConstructionError(f"K changes sign at r={r_bad:.6g} for N={N}")

    Q = q_profile(N)
    bracket = sp.Rational((N - 2) ** 2, 4) * R2 + (N - 1) * Q
    return build_weight("improved_32", N, k_num * bracket, (phi, Q, R2))


def weight_w1(N: int) -> RadialWeight:
    """((N-4)^2 / 4) / (T Q), partner of V = 1/Q"""
    _require(N, 5, "W1 weight")
    return build_weight("w1", N, PowerSum.constant(sp.Rational((N - 4) ** 2, 4)), (t_profile(N), q_profile(N)))


def weight_inverse_square_t(N: int) -> RadialWeight:
    """((N-4)^2 / 4) / (r^2 T), partner of V = 1/r^2"""
    _require(N, 5, "inverse-square weight")
    return build_weight("w1_r2", N, PowerSum.constant(sp.Rational((N - 4) ** 2, 4)), (R2, t_profile(N)))


def weight_w2(N: int) -> RadialWeight:
    """K / Q, partner of V = 1/Q"""
    _require(N, 7, "W2 weight")
    return build_weight("w2", N, k_numerator(N), (phi_profile(N), q_profile(N)))


def weight_w3(N: int) -> RadialWeight:
    """K / r^2, partner of V = 1/r^2"""
    _require(N, 7, "W3 weight")
    return build_weight("w3", N, k_numerator(N), (phi_profile(N), R2))


def weight_hardy_28(N: int) -> RadialWeight:
    """((N-2)^2 / 4) / Q"""
    _require(N, 3, "first-order Hardy weight")
    return build_weight("hardy_28", N, PowerSum.constant(sp.Rational((N - 2) ** 2, 4)), (q_profile(N),))


def weight_power(N: int, coeff: Number, exponent: Number, name: Optional[str] = None) -> RadialWeight:
    """coeff r^exponent (Euler-type weights, V = 1, V = 1/r^2, c/r^2 ...)"""
    c, p = as_rational(coeff), as_rational(exponent)
    label = name or f"{c}*r^({p})"
    if c == 0:
        # W = 0 is allowed as the trivial partner of V = 1
        return RadialWeight(name=label, N=N, numerator=PowerSum())
    return build_weight(label, N, PowerSum.monomial(c, p))


def inverse_q(N: int) -> RadialWeight:
    """V = 1/Q"""
    return build_weight("inverse_q", N, PowerSum.constant(1), (q_profile(N),))


WEIGHT_BUILDERS: Dict[str, Callable[[int], RadialWeight]] = {
    "classical": weight_classical,
    "improved_31": weight_improved_31,
    "improved_32": weight_improved_32,
}

WEIGHT_ALIASES = {"classical_6": "classical", "6": "classical", "31": "improved_31", "32": "improved_32"}


def weight_by_name(name: str, N: int) -> RadialWeight:
    key = WEIGHT_ALIASES.get(name, name)
    if key not in WEIGHT_BUILDERS:
        raise ConfigurationError(f"unknown weight '{name}', choose from {sorted(WEIGHT_BUILDERS)}")
    return WEIGHT_BUILDERS[key](N)
