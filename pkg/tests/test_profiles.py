import pytest
from sympy import Rational

from backend.calculus.power_sum import power_laplacian
from backend.subsolutions.profiles import (
    TABLE_ONE,
    H_N,
    SubSolutionSpec,
    coefficients,
    lambda_bar,
    regularity_criterion,
    singular_profile,
    subsolution_profile,
)
from backend.utils.errors import ConfigurationError


def test_lambda_bar_in_dimension_nine():
    assert lambda_bar(9) == Rational(3800, 81)


def test_coefficients():
    assert coefficients(10, 3)[0] == Rational(297, 185)
    assert coefficients(31, 2)[0] == Rational(279, 97)


@pytest.mark.parametrize("N", range(9, 41))
@pytest.mark.parametrize("m", [2, "14/5", 3])
def test_profile_identities(N, m):
    a, b = coefficients(N, m)
    assert a - b == 1
    u = subsolution_profile(N, m)
    assert u.value_at_one() == 0
    assert power_laplacian(u, N).value_at_one() == 0


def test_singular_profile_touches_down():
    u = singular_profile()
    assert u.value_at_one() == 0
    assert u.evaluate(0.0) == 1.0


def test_criterion_fails_below_nine():
    assert not any(regularity_criterion(N) for N in range(5, 9))


def test_criterion_holds_from_dimension_nine():
    assert all(regularity_criterion(N) for N in range(9, 41))


def test_criterion_boundary_values():
    assert 2 * lambda_bar(8) > H_N(8)
    assert 2 * lambda_bar(9) <= H_N(9)


def test_exponent_must_exceed_four_thirds():
    with pytest.raises(ConfigurationError):
        coefficients(10, "4/3")


def test_dimension_below_five_is_rejected():
    with pytest.raises(ConfigurationError):
        lambda_bar(4)


def test_table_rows_keep_a_gap():
    assert sorted(TABLE_ONE) == list(range(9, 16))
    assert all(lam < sigma for lam, sigma in TABLE_ONE.values())
    assert TABLE_ONE[9] == (249, 251)
    assert TABLE_ONE[15] == (860, 2235)


def test_spec_build_and_export():
    spec = SubSolutionSpec.build(10, 3, 320, 367, "31")
    assert spec.weight_choice == "improved_31"
    assert spec.a == Rational(297, 185)
    data = spec.to_dict()
    assert data["m"] == "3"
    assert data["lambda_prime"] == "320"
    assert spec.one_minus().value_at_one() == 1


def test_spec_rejects_unknown_weights():
    with pytest.raises(ConfigurationError):
        SubSolutionSpec.build(10, 3, 320, 367, "mystery")
