import math

import numpy as np
import pytest
import sympy as sp
from sympy import Rational

from backend.calculus.power_sum import (
    PowerSum,
    as_rational,
    eval_powersum,
    leading_term,
    limit_at_one,
    power_bilaplacian,
    power_laplacian,
    r,
    rational_power,
)
from backend.subsolutions.profiles import lambda_bar
from backend.utils.errors import ConfigurationError, EvaluationError


def test_laplacian_of_constant_vanishes():
    assert power_laplacian(PowerSum.constant(1), 5).is_zero()


def test_laplacian_of_r_squared_is_2N():
    assert power_laplacian(PowerSum.monomial(1, 2), 5).terms == ((Rational(10), Rational(0)),)


def test_laplacian_of_four_thirds_power():
    lap = power_laplacian(PowerSum.monomial(1, "4/3"), 9)
    assert lap.terms == ((Rational(100, 9), Rational(-2, 3)),)


def test_bilaplacian_of_r4():
    assert power_bilaplacian(PowerSum.monomial(1, 4), 5).terms == ((Rational(280), Rational(0)),)


def test_bilaplacian_of_singular_profile_gives_lambda_bar():
    result = power_bilaplacian(PowerSum.monomial(-1, "4/3"), 9)
    assert result.terms == ((Rational(3800, 81), Rational(-8, 3)),)


def test_bilaplacian_of_constant_vanishes():
    assert power_bilaplacian(PowerSum.constant(1), 7).is_zero()


@pytest.mark.parametrize("N", range(5, 41))
def test_singular_profile_identity_is_exact(N):
    u1 = PowerSum.of((1, 0), (-1, "4/3"))
    product = power_bilaplacian(u1, N) * (1 - u1) ** 2
    assert product.terms == ((lambda_bar(N), Rational(0)),)


def test_laplacian_is_linear():
    f = PowerSum.of((3, "4/3"), (-2, 2), ("1/7", "5/2"))
    g = PowerSum.of((5, 0), (1, 3), (-4, "-1/3"))
    lhs = power_laplacian(2 * f - 3 * g, 8)
    rhs = 2 * power_laplacian(f, 8) - 3 * power_laplacian(g, 8)
    assert lhs == rhs


def test_terms_are_normalized():
    ps = PowerSum.of((1, 2), (2, 1), (-1, 2), (0, 5))
    assert ps.terms == ((Rational(2), Rational(1)),)
    assert PowerSum.of((1, 0), (-1, 0)).is_zero()


def test_phi_vanishes_at_one():
    phi = PowerSum.of((1, "-5/2"), (9, -2), (10, 1), (-20, 0))
    assert phi.value_at_one() == 0
    assert eval_powersum(phi, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_constant_evaluation():
    assert eval_powersum(PowerSum.constant(1), 0.5) == 1.0


def test_evaluation_keeps_array_shape():
    ps = PowerSum.of((1, 0), (-1, "4/3"))
    r = np.array([[0.25, 0.5], [0.75, 1.0]])
    np.testing.assert_allclose(ps.evaluate(r), 1 - r ** (4 / 3))


def test_negative_exponent_at_origin_is_rejected():
    with pytest.raises(EvaluationError):
        PowerSum.monomial(1, "-8/3").evaluate(np.array([0.0, 0.5]))


def test_negative_radius_is_rejected():
    with pytest.raises(EvaluationError):
        PowerSum.constant(1).evaluate(-0.1)


def test_laplacian_needs_dimension_two():
    with pytest.raises(ConfigurationError):
        power_laplacian(PowerSum.monomial(1, 2), 1)


def test_floats_convert_through_their_decimal_form():
    assert as_rational(2.8) == Rational(14, 5)
    assert as_rational("4/3") == Rational(4, 3)
    with pytest.raises(ConfigurationError):
        as_rational(float("inf"))


def test_rational_power_is_exact_when_possible():
    assert rational_power(Rational(1, 8), "-4/3") == 16
    assert rational_power(Rational(1, 8), "4/3") == Rational(1, 16)
    assert float(rational_power(2, "1/2")) == pytest.approx(2**0.5)


def test_scaled_argument():
    ps = PowerSum.monomial(1, "4/3").scaled_argument(Rational(1, 8))
    assert ps.terms == ((Rational(1, 16), Rational(4, 3)),)


def test_leading_term_is_lowest_exponent():
    ps = PowerSum.of((10, 1), (9, -2), (1, "-5/2"))
    assert ps.leading() == (Rational(1), Rational(-5, 2))
    assert PowerSum().leading() is None


def test_list_export_restores_the_sum():
    ps = PowerSum.of((1, 0), ("-297/185", "4/3"), ("112/185", 3))
    assert PowerSum.from_list(ps.to_list()) == ps


def test_sympy_expression_reads_back():
    ps = PowerSum.from_expr(1 - r ** Rational(4, 3) + 3 * r ** 2 * r ** Rational(1, 2))
    assert ps == PowerSum.of((1, 0), (-1, "4/3"), (3, "5/2"))
    assert PowerSum.from_expr(ps.expr) == ps
    assert PowerSum.from_expr(r - r).is_zero()


def test_non_power_expressions_are_rejected():
    with pytest.raises(ConfigurationError):
        PowerSum.from_expr(sp.sin(r))


def test_leading_term_of_a_quotient():
    expr = (3 * r ** Rational(1, 2) + r) / (r ** 2 - r ** Rational(9, 2))
    assert leading_term(expr) == (3, Rational(-3, 2))


def test_limit_at_one_cancels_common_zeros():
    assert limit_at_one((1 - r ** Rational(4, 3)) / (1 - r)) == pytest.approx(4 / 3)
    assert limit_at_one(PowerSum.of((1, 0), (-1, 2)).expr) == 0.0


@pytest.mark.parametrize(
    "expr, expected",
    [
        (1 / (r ** 2 - r ** Rational(9, 2)), math.inf),
        (-1 / (r ** 2 - r ** Rational(9, 2)), -math.inf),
        (-1 / (1 - r) ** 2, -math.inf),
    ],
)
def test_limit_at_one_signs_poles_from_inside(expr, expected):
    assert limit_at_one(expr) == expected
