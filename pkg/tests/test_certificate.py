import math

import pytest

from backend.hardy_rellich.weights import weight_by_name, weight_classical
from backend.subsolutions.cases import CaseRouter, CertificationCase
from backend.subsolutions.certificate import (
    Verdict,
    certify,
    pde_margin,
    stability_margin,
    table1_verify,
    tau_beta_margin,
    weight_pointwise_margin,
)
from backend.subsolutions.profiles import SubSolutionSpec
from backend.utils.errors import ConfigurationError


@pytest.mark.parametrize("N", range(9, 16))
def test_table_rows_are_certified(N):
    report = table1_verify(N)
    assert report.verdict is Verdict.CERTIFIED, report.violation
    assert report.pde_margin >= 0.0
    assert report.stability_margin >= 0.0
    assert report.singular and report.range_ok
    assert report.bc_residuals == (0.0, 0.0)
    data = report.to_dict()
    assert data["case"] in {"dimension_nine", "table_rows"}
    assert data["weight_verification"]["passed"]


@pytest.mark.parametrize("N", [16, 30])
def test_half_constant_family(N):
    report = table1_verify(N, k_max=1)
    assert report.certified
    assert report.to_dict()["case"] == "half_constant"


def test_large_dimension_family():
    report = table1_verify(31, k_max=1)
    assert report.certified
    assert report.to_dict()["chain"]["chain_holds"]


@pytest.mark.slow
@pytest.mark.parametrize("N", range(16, 31))
def test_half_constant_family_across_its_range(N):
    report = table1_verify(N, k_max=1)
    assert report.verdict is Verdict.CERTIFIED, report.violation
    assert report.to_dict()["case"] == "half_constant"
    assert report.spec.m == 3


@pytest.mark.slow
@pytest.mark.parametrize("N", range(31, 41))
def test_large_dimension_family_across_its_range(N):
    report = table1_verify(N, k_max=1)
    assert report.verdict is Verdict.CERTIFIED, report.violation
    assert report.to_dict()["case"] == "large_dimension"
    assert report.to_dict()["chain"]["chain_holds"]


@pytest.mark.parametrize("N", [9, 12, 20, 35])
def test_certificate_survives_grid_refinement(N):
    spec = CaseRouter().build_spec(N)
    weight = weight_by_name(spec.weight_choice, N).mark_verified("rayleigh")
    coarse = certify(spec, weight, M=2000, r_min=1e-8)
    # 2M - 1 geometric nodes contain the M coarse ones
    fine = certify(spec, weight, M=3999, r_min=1e-8)
    assert coarse.certified, coarse.violation
    assert fine.certified, fine.violation
    assert fine.violation is None
    assert fine.pde_margin <= coarse.pde_margin + 1e-9 * max(1.0, abs(coarse.pde_margin))
    assert fine.stability_margin <= coarse.stability_margin + 1e-9 * max(1.0, abs(coarse.stability_margin))
    assert fine.pde_margin >= 0.0 and fine.stability_margin >= 0.0


def test_large_dimension_family_fails_at_thirty():
    report = table1_verify(30, case=CertificationCase.LARGE_DIMENSION, k_max=0)
    assert report.verdict is Verdict.VIOLATED
    assert report.violation["margin"] == "chain"


def test_lambda_prime_above_sigma_is_a_violation():
    report = table1_verify(9, lambda_prime=400, verify_weight=False)
    assert report.verdict is Verdict.VIOLATED
    assert report.violation["margin"] == "sigma_gap"


def test_unverified_weight_is_inconclusive():
    report = table1_verify(10, verify_weight=False)
    assert report.verdict is Verdict.INCONCLUSIVE
    assert not report.weight_verified
    assert report.violation is None


def test_exact_margins_at_the_endpoints():
    spec = CaseRouter().build_spec(10)
    pde = pde_margin(spec)
    assert pde.at_one() == float(pde.numerator.value_at_one())
    assert pde.at_one() >= 0.0
    assert pde.leading_at_zero()["exponent"] == "0"
    assert pde.leading_at_zero()["sign"] > 0

    stability = stability_margin(spec, weight_by_name("improved_31", 10))
    assert math.isinf(stability.at_one()) and stability.at_one() > 0
    crossover = pde.crossover()
    assert crossover["mismatch"] < 1e-3


def test_weight_dimension_must_match():
    spec = CaseRouter().build_spec(10)
    with pytest.raises(ConfigurationError):
        certify(spec, weight_classical(11))


def test_perturbed_target_must_stay_below_sigma():
    spec = CaseRouter().build_spec(9)
    with pytest.raises(ConfigurationError):
        certify(spec, weight_by_name("improved_32", 9), lambda_target=251)


def test_tau_margin_vanishes_without_slack():
    spec = CaseRouter().build_spec(9)
    assert tau_beta_margin(9, spec, spec.lambda_prime) == 0.0


def test_tau_margin_is_positive_and_recertifies():
    spec = CaseRouter().build_spec(9)
    rho = tau_beta_margin(9, spec, 250)
    assert 0.0 < rho < math.inf
    report = table1_verify(9, tau_ratio=rho / 2, lambda_target=250, verify_weight=False)
    assert report.violation is None
    assert report.to_dict()["perturbation"]["lambda_target"] == 250.0


def test_tau_margin_rejects_targets_outside_the_gap():
    spec = CaseRouter().build_spec(9)
    with pytest.raises(ConfigurationError):
        tau_beta_margin(9, spec, 300)
    with pytest.raises(ConfigurationError):
        tau_beta_margin(10, spec, 250)


def test_pointwise_margin_of_the_dimension_nine_weight():
    result = weight_pointwise_margin(9, weight_by_name("improved_32", 9))
    assert result["passed"]
    assert result["min_margin"] >= 0.0
    assert result["two_sigma"] == 502.0
    assert result["profile_m"] == "14/5"


def test_classical_weight_cannot_support_dimension_nine():
    result = weight_pointwise_margin(9, weight_classical(9))
    assert not result["passed"]


def test_spec_with_custom_constants():
    spec = SubSolutionSpec.build(12, 3, 502, 851, "improved_31")
    report = certify(spec, weight_by_name("improved_31", 12).mark_verified("rayleigh"))
    assert report.certified
