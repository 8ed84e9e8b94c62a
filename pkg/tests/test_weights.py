import numpy as np
import pytest
from sympy import Rational

from backend.calculus.power_sum import PowerSum
from backend.hardy_rellich.weights import (
    RadialWeight,
    build_weight,
    hardy_rellich_constant,
    q_profile,
    weight_by_name,
    weight_classical,
    weight_hardy_28,
    weight_improved_31,
    weight_improved_32,
    weight_power,
    weight_w1,
    zero_order_at_one,
)
from backend.subsolutions.profiles import H_N
from backend.utils.errors import ConfigurationError, InvalidWeight, WeightConstructionError


def test_hardy_rellich_constants():
    assert hardy_rellich_constant(16) == 2304
    assert H_N(9) == Rational(2025, 16)


def test_classical_weight():
    w = weight_classical(16)
    assert w.leading() == (Rational(2304), Rational(-4))
    assert w.evaluate(0.5) == pytest.approx(2304 * 16)
    assert w.pole_order_at_one() == 0
    assert not w.verified


@pytest.mark.parametrize("N", [9, 12, 20, 31])
def test_improved_weights_start_like_the_classical_one(N):
    for builder in (weight_improved_31, weight_improved_32):
        coeff, exponent = builder(N).leading()
        assert coeff == hardy_rellich_constant(N)
        assert exponent == -4


@pytest.mark.parametrize("N", [9, 12, 20])
def test_improved_31_dominates_the_classical_weight(N):
    r = np.geomspace(1e-6, 0.999, 500)
    assert np.all(weight_improved_31(N).evaluate(r) >= weight_classical(N).evaluate(r) * (1 - 1e-12))


def test_improved_31_blows_up_at_the_boundary():
    w = weight_improved_31(10)
    assert w.pole_order_at_one() == 1
    assert w.singular_at_one


def test_improved_32_needs_dimension_seven():
    with pytest.raises(ConfigurationError):
        weight_improved_32(6)


@pytest.mark.parametrize("N", [7, 8])
def test_improved_32_fails_its_sign_check_in_low_dimensions(N):
    with pytest.raises(WeightConstructionError):
        weight_improved_32(N)


def test_weight_aliases():
    assert weight_by_name("6", 10).name == "classical"
    assert weight_by_name("classical_6", 10).name == "classical"
    assert weight_by_name("31", 10).name == "improved_31"
    assert weight_by_name("32", 10).name == "improved_32"
    with pytest.raises(ConfigurationError):
        weight_by_name("nope", 10)


def test_negative_weights_are_rejected():
    with pytest.raises(InvalidWeight):
        build_weight("negative", 9, PowerSum.monomial(-1, -4))
    with pytest.raises(InvalidWeight):
        build_weight("sign_change", 9, PowerSum.of((1, -2), (-4, 0)))


def test_scaling_drops_verification():
    w = weight_classical(16).mark_verified("rayleigh")
    assert w.verified and w.provenance == ("rayleigh",)
    doubled = w.scaled(2)
    assert not doubled.verified
    assert doubled.leading() == (Rational(4608), Rational(-4))
    assert doubled.name == "2*classical"


def test_zero_power_weight_is_allowed():
    w = weight_power(9, 0, 0)
    np.testing.assert_array_equal(w.evaluate(np.array([0.1, 0.5])), 0.0)


def test_first_order_weight_and_q_profile():
    q = q_profile(10)
    assert q.value_at_one() == 1 - Rational(10, 18)
    w = weight_hardy_28(10)
    assert w.leading() == (Rational(16), Rational(-2))


def test_weight_export():
    data = weight_w1(9).to_dict()
    assert data["name"] == "w1"
    assert data["leading_at_zero"] == {"coeff": "25/4", "exponent": "-4"}
    assert data["pole_order_at_one"] == 1
    assert data["verified"] is False
    assert len(data["denominators"]) == 2


def test_zero_order_at_one():
    assert zero_order_at_one(PowerSum.of((1, 0), (-2, 1), (1, 2))) == 2
    assert zero_order_at_one(q_profile(9)) == 0
    assert zero_order_at_one(PowerSum.of((1, 2), (-1, "9/2"))) == 1


def test_double_zero_raises_the_pole_order():
    square = PowerSum.of((1, 0), (-2, 1), (1, 2))
    w = RadialWeight(name="double", N=9, numerator=PowerSum.constant(1), denominators=(square,))
    assert w.pole_order_at_one() == 2
    assert w.singular_at_one
