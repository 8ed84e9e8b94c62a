"""
Exact radial power sums
Finite sums of c * r^p with rational coefficients and exponents, closed
under the radial Laplacian, products and differentiation. The exact layer
is sympy; floating-point evaluation stays in numpy.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import sympy as sp

from backend.utils.errors import ConfigurationError, EvaluationError

# radial variable, r > 0 so powers combine without branch bookkeeping
r = sp.Symbol("r", positive=True)

Number = Union[int, float, Fraction, sp.Rational, str]
Term = Tuple[sp.Rational, sp.Rational]


def as_rational(value: Number) -> sp.Rational:
    """
    Convert to an exact rational

    Floats go through their decimal form, so 2.8 becomes 14/5 rather than
    the nearest binary fraction.
    """
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, sp.Basic):
        if value.is_Rational:
            return value
        if value.is_number and value.is_finite:
            return as_rational(float(value))
        raise ConfigurationError(f"{value} is not a finite number")
    if isinstance(value, (int, np.integer)):
        return sp.Integer(int(value))
    if isinstance(value, Fraction):
        return sp.Rational(value.numerator, value.denominator)
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ConfigurationError(f"non-finite value {value!r} in an exact expression")
        return sp.nsimplify(float(value), rational=True)
    if isinstance(value, str):
        try:
            return sp.Rational(value.strip())
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"cannot read {value!r} as a rational") from exc
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def rational_power(base: Number, exponent: Number) -> sp.Rational:
    """
    base^exponent, exact when the result is rational

    (1/8)^(4/3) is exactly 1/16; irrational powers fall back to the nearest
    float converted through as_rational.
    """
    b, p = as_rational(base), as_rational(exponent)
    if b <= 0:
        if b == 0 and p > 0:
            return sp.Integer(0)
        raise EvaluationError(f"rational_power needs a positive base, got {b}")
    value = b**p
    if value.is_Rational:
        return value
    return as_rational(float(value))


def _normalize(terms: Iterable[Tuple[Number, Number]]) -> Tuple[Term, ...]:
    merged: Dict[sp.Rational, sp.Rational] = {}
    for coeff, exponent in terms:
        p = as_rational(exponent)
        merged[p] = merged.get(p, sp.Integer(0)) + as_rational(coeff)
    return tuple((c, p) for p, c in sorted(merged.items()) if c != 0)


def _split_term(key: sp.Expr, coeff: sp.Expr) -> Term:
    if not key.free_symbols:
        return as_rational(coeff * key), sp.Integer(0)
    base, exponent = key.as_base_exp()
    if base != r or not exponent.is_Rational or not coeff.is_Rational:
        raise ConfigurationError(f"{coeff * key} is not a rational power of r")
    return coeff, exponent


@dataclass(frozen=True)
class PowerSum:
    """Sum of c_i r^{p_i} with exponents strictly increasing"""

    terms: Tuple[Term, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", _normalize(self.terms))

    # ---- constructors ----

    @classmethod
    def of(cls, *pairs: Tuple[Number, Number]) -> "PowerSum":
        """PowerSum.of((1, 0), (-1, "4/3")) is 1 - r^(4/3)"""
        return cls(tuple(pairs))

    @classmethod
    def monomial(cls, coeff: Number, exponent: Number) -> "PowerSum":
        return cls(((coeff, exponent),))

    @classmethod
    def constant(cls, value: Number) -> "PowerSum":
        return cls(((value, 0),))

    @classmethod
    def from_expr(cls, expr: sp.Expr) -> "PowerSum":
        """Read back a sympy expression in r that expands to a power sum"""
        expanded = sp.expand(sp.sympify(expr))
        if expanded == 0:
            return cls()
        return cls(tuple(_split_term(key, c) for key, c in expanded.as_coefficients_dict().items()))

    # ---- structure ----

    @property
    def expr(self) -> sp.Expr:
        return sp.Add(*(c * r**p for c, p in self.terms))

    @property
    def exponents(self) -> List[sp.Rational]:
        return [p for _, p in self.terms]

    @property
    def coefficients(self) -> List[sp.Rational]:
        return [c for c, _ in self.terms]

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def leading(self) -> Optional[Term]:
        """Dominant term as r -> 0, None for the zero sum"""
        if not self.terms:
            return None
        return leading_term(self.expr)

    def value_at_one(self) -> sp.Rational:
        """Exact value at r = 1"""
        return self.expr.subs(r, 1)

    def constant_term(self) -> sp.Rational:
        for c, p in self.terms:
            if p == 0:
                return c
        return sp.Integer(0)

    # ---- arithmetic ----

    def __add__(self, other) -> "PowerSum":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return PowerSum(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self) -> "PowerSum":
        return PowerSum(tuple((-c, p) for c, p in self.terms))

    def __sub__(self, other) -> "PowerSum":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "PowerSum":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "PowerSum":
        other = _coerce(other)
        if other is None:
            return NotImplemented
        return PowerSum(
            tuple((c1 * c2, p1 + p2) for c1, p1 in self.terms for c2, p2 in other.terms)
        )

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "PowerSum":
        if not isinstance(power, int) or power < 0:
            return NotImplemented
        result = PowerSum.constant(1)
        for _ in range(power):
            result = result * self
        return result

    def scaled_argument(self, factor: Number) -> "PowerSum":
        """The sum evaluated at factor * r, i.e. c factor^p r^p"""
        scale = as_rational(factor)
        return PowerSum(tuple((c * rational_power(scale, p), p) for c, p in self.terms))

    # ---- calculus ----

    def derivative(self) -> "PowerSum":
        return PowerSum.from_expr(sp.diff(self.expr, r))

    def laplacian(self, N: int) -> "PowerSum":
        """Radial Laplacian f'' + (N - 1) f' / r"""
        f = self.expr
        return PowerSum.from_expr(sp.diff(f, r, 2) + (N - 1) * sp.diff(f, r) / r)

    def bilaplacian(self, N: int) -> "PowerSum":
        return self.laplacian(N).laplacian(N)

    # ---- evaluation ----

    def __call__(self, radius):
        return self.evaluate(radius)

    def evaluate(self, radius):
        """
        Evaluate on floats with compensated summation

        Args:
            radius: scalar or array of radii in [0, 1]

        Returns:
            float or numpy array with the shape of radius
        """
        values = np.asarray(radius, dtype=float)
        flat = np.atleast_1d(values).ravel()
        if np.any(flat < 0.0):
            raise EvaluationError("power sums are only defined for r >= 0")
        if self.terms and self.terms[0][1] < 0 and np.any(flat == 0.0):
            raise EvaluationError("negative exponent evaluated at r = 0")

        if not self.terms:
            out = np.zeros_like(flat)
        elif len(self.terms) == 1:
            c, p = self.terms[0]
            out = float(c) * np.power(flat, float(p))
        else:
            columns = np.array([float(c) * np.power(flat, float(p)) for c, p in self.terms])
            out = np.fromiter((math.fsum(col) for col in columns.T), dtype=float, count=flat.size)

        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"non-finite value evaluating {self}")
        if values.ndim == 0:
            return float(out[0])
        return out.reshape(values.shape)

    def scalar_function(self):
        """Plain float closure for hot loops (ODE right-hand sides); no domain checks"""
        pairs = [(float(c), float(p)) for c, p in self.terms]

        def value(x: float) -> float:
            return math.fsum(c * x ** p for c, p in pairs)

        return value

    # ---- export ----

    def to_list(self) -> List[List[str]]:
        return [[str(c), str(p)] for c, p in self.terms]

    @classmethod
    def from_list(cls, data: Iterable[Iterable[str]]) -> "PowerSum":
        return cls(tuple((c, p) for c, p in data))

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for c, p in self.terms:
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if p == 0:
                body = f"{mag}"
            else:
                power = "r" if p == 1 else f"r^({p})"
                body = power if mag == 1 else f"{mag} {power}"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text


def _coerce(value) -> Optional[PowerSum]:
    if isinstance(value, PowerSum):
        return value
    try:
        return PowerSum.constant(value)
    except TypeError:
        return None


# ==================== ENDPOINT ANALYSIS ====================

# r = s^d turns quotients of power sums into rational functions of s
s = sp.Symbol("s", positive=True)


def in_root_variable(expr: sp.Expr) -> Tuple[sp.Expr, int]:
    """(expr with r = s^d, d) for the smallest d making every power of r integral"""
    expr = sp.sympify(expr)
    d = math.lcm(*(int(p.exp.q) for p in expr.atoms(sp.Pow) if p.base == r and p.exp.is_Rational))
    return expr.subs(r, s**d), d


def leading_term(expr: sp.Expr) -> Term:
    """(coefficient, exponent) of the dominant term of expr as r -> 0"""
    rational, d = in_root_variable(expr)
    head = rational.as_leading_term(s)
    coeff, k = head.as_coeff_exponent(s)
    if not coeff.is_Rational or not k.is_Rational:
        raise ConfigurationError(f"leading term {head} is not a rational power of r")
    return coeff, k / d


def limit_at_one(expr: sp.Expr) -> float:
    """
    One-sided limit of expr as r -> 1 from inside the ball, +-inf for a pole

    Common zeros at s = 1 are cancelled first; a remaining zero of order k
    in the denominator behaves like (s - 1)^k, negative for odd k on s < 1.
    """
    rational, _ = in_root_variable(expr)
    top, bottom = (sp.Poly(part, s) for part in sp.fraction(sp.cancel(rational)))
    order = 0
    while bottom.eval(1) == 0:
        if bottom.is_zero:
            raise EvaluationError(f"no limit at r = 1 for {expr}")
        bottom = bottom.diff(s)
        order += 1
    value = top.eval(1) / bottom.eval(1)
    if order == 0:
        return float(value)
    return math.copysign(math.inf, float(value) * (-1) ** order)


def power_laplacian(ps: PowerSum, N: int) -> PowerSum:
    """Exact radial Laplacian in dimension N"""
    if N < 2:
        raise ConfigurationError(f"dimension must be at least 2, got {N}")
    return ps.laplacian(N)


def power_bilaplacian(ps: PowerSum, N: int) -> PowerSum:
    """Exact radial bilaplacian in dimension N"""
    return power_laplacian(power_laplacian(ps, N), N)


def eval_powersum(ps: PowerSum, radius):
    """Floating-point value of ps at radius (scalar or array)"""
    return ps.evaluate(radius)
