import pytest

from backend.hardy_rellich.bessel_pair import (
    BesselPairSpec,
    PairVerdict,
    bessel_pair_test,
    constituent_pairs,
    euler_pair,
    indicial_exponent,
    inverse_square,
)
from backend.hardy_rellich.weights import inverse_q, weight_power, weight_w1
from backend.utils.errors import ConfigurationError


def critical(N):
    return (N - 2) ** 2 / 4


def test_zero_partner_is_positive():
    solution = bessel_pair_test(euler_pair(9, 0))
    assert solution.verdict is PairVerdict.POSITIVE
    assert solution.exponent == pytest.approx(0.0)


def test_euler_pair_at_the_critical_constant():
    solution = bessel_pair_test(euler_pair(5, critical(5)))
    assert solution.positive
    assert solution.exponent == pytest.approx(-1.5)


def test_euler_pair_above_the_critical_constant():
    solution = bessel_pair_test(euler_pair(5, critical(5) + 0.5))
    assert solution.verdict is PairVerdict.SIGN_CHANGE
    assert 0.0 < solution.sign_change_radius < 1.0
    assert solution.meta["oscillatory_indicial"]


@pytest.mark.parametrize("fraction", [0.5, 1.0])
def test_euler_pairs_up_to_the_critical_constant(fraction):
    assert bessel_pair_test(euler_pair(10, fraction * critical(10))).positive


def test_euler_pair_five_percent_above_critical():
    solution = bessel_pair_test(euler_pair(10, 1.05 * critical(10)))
    assert solution.verdict is PairVerdict.SIGN_CHANGE
    assert solution.sign_changes >= 1


def test_weighted_hardy_pair_is_positive():
    solution = bessel_pair_test(BesselPairSpec(inverse_q(9), weight_w1(9), 9))
    assert solution.positive
    assert solution.to_dict()["evidence"] == "numerical"


def test_indicial_exponent():
    s, oscillatory = indicial_exponent(4.0, 2.25)
    assert s == pytest.approx(-1.5)
    assert not oscillatory
    _, oscillatory = indicial_exponent(4.0, 3.0)
    assert oscillatory


def test_too_singular_partner_is_inconclusive():
    spec = BesselPairSpec(weight_power(9, 1, 0, name="one"), weight_power(9, 1, -3), 9)
    solution = bessel_pair_test(spec)
    assert solution.verdict is PairVerdict.INCONCLUSIVE


def test_flux_hypothesis_failure_is_inconclusive():
    spec = BesselPairSpec(weight_power(9, 1, -8, name="steep"), weight_power(9, 1, -10), 9)
    assert not spec.inverse_flux_diverges
    assert bessel_pair_test(spec).verdict is PairVerdict.INCONCLUSIVE


def test_pairs_must_share_the_dimension():
    with pytest.raises(ConfigurationError):
        BesselPairSpec(inverse_square(9), weight_w1(10), 9)


@pytest.mark.parametrize("name, count", [("classical", 1), ("31", 2), ("improved_32", 2)])
def test_constituent_pairs(name, count):
    pairs = constituent_pairs(name, 10)
    assert len(pairs) == count
    assert all(pair.hypotheses_hold for pair in pairs)


def test_unknown_weight_has_no_pairs():
    with pytest.raises(ConfigurationError):
        constituent_pairs("w9", 10)
