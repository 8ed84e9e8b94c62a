"""
Pointwise certificates for singular sub-solutions

Both conditions are exact power-sum expressions in r:
  pde:        lambda' - (Delta^2 u - rho Delta u)(1 - u)^2 >= 0
  stability:  W (1 - u)^3 - 2 sigma >= 0
They are sampled in floating point on a geometric grid of (0, 1) and
evaluated exactly at r = 1 and to leading order at r = 0.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
import sympy as sp

from backend.calculus.grid import make_grid
from backend.calculus.power_sum import (
    Number,
    PowerSum,
    as_rational,
    leading_term,
    limit_at_one,
    power_bilaplacian,
    power_laplacian,
)
from backend.hardy_rellich.verification import DEFAULT_TOLERANCE, verify_weight_rayleigh
from backend.hardy_rellich.weights import RadialWeight, weight_by_name
from backend.solver.branch import BranchResult
from backend.stability.rayleigh import K_MAX
from backend.subsolutions.cases import CaseRouter, CertificationCase, large_dimension_chain
from backend.subsolutions.profiles import SubSolutionSpec, lambda_bar
from backend.utils.config import load_settings
from backend.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

CROSSOVER_RADIUS = 1e-6


class Verdict(Enum):
    CERTIFIED = "certified"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ExactMargin:
    """margin(r) = numerator(r) / denominator(r) with denominator > 0 on (0, 1)"""

    name: str
    numerator: PowerSum
    denominator: PowerSum = field(default_factory=lambda: PowerSum.constant(1))

    def sample(self, r: np.ndarray) -> np.ndarray:
        return self.numerator.evaluate(r) / self.denominator.evaluate(r)

    @property
    def expr(self) -> sp.Expr:
        return self.numerator.expr / self.denominator.expr

    def at_one(self) -> float:
        """Exact limit at r = 1 from inside the ball"""
        bottom = self.denominator.value_at_one()
        if bottom != 0:
            return float(self.numerator.value_at_one() / bottom)
        return limit_at_one(self.expr)

    def leading_at_zero(self) -> Dict[str, Any]:
        """Dominant behaviour as r -> 0: sign decided by the lowest-order term"""
        if self.numerator.is_zero():
            return {"coefficient": "0", "exponent": None, "sign": 0}
        coeff, exponent = leading_term(self.expr)
        return {"coefficient": str(coeff), "exponent": str(exponent), "sign": int(sp.sign(coeff))}

    def crossover(self, radius: float = CROSSOVER_RADIUS) -> Dict[str, float]:
        """Full evaluation against the two leading terms at the crossover radius"""
        full = float(self.sample(np.array([radius]))[0])
        head = PowerSum(self.numerator.terms[:2])
        leading = float(head.evaluate(radius) / self.denominator.evaluate(radius))
        scale = max(abs(full), abs(leading), 1e-300)
        return {"radius": radius, "full": full, "leading": leading, "mismatch": abs(full - leading) / scale}


@dataclass(frozen=True, eq=False)
class CertificateReport:
    """Margins, endpoint analysis and verdict for one sub-solution"""

    spec: SubSolutionSpec
    weight_name: str
    weight_verified: bool
    pde_margin: float
    pde_radius: float
    stability_margin: float
    stability_radius: float
    endpoint: Dict[str, float]
    leading: Dict[str, Dict[str, Any]]
    crossover: Dict[str, Dict[str, float]]
    bc_residuals: Tuple[float, float]
    singular: bool
    range_ok: bool
    grid: Dict[str, Any]
    verdict: Verdict
    violation: Optional[Dict[str, Any]] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.verdict is Verdict.CERTIFIED

    def to_dict(self) -> Dict[str, Any]:
        return {
            "N": self.spec.N,
            "m": str(self.spec.m),
            "lambda_prime": float(self.spec.lambda_prime),
            "sigma": float(self.spec.sigma),
            "weight": self.weight_name,
            "weight_verified": self.weight_verified,
            "margins": {
                "pde": self.pde_margin,
                "pde_radius": self.pde_radius,
                "stability": self.stability_margin,
                "stability_radius": self.stability_radius,
                "endpoint": self.endpoint,
                "leading_at_zero": self.leading,
                "crossover": self.crossover,
                "bc_residuals": list(self.bc_residuals),
                "tolerance": 0.0,
            },
            "singular": self.singular,
            "range_ok": self.range_ok,
            "grid": self.grid,
            "verdict": self.verdict.value,
            "violation": self.violation,
            **self.extras,
        }


def _sample_radii(M: Optional[int], r_min: Optional[float]) -> Tuple[np.ndarray, Dict[str, Any]]:
    settings = load_settings()
    grid = make_grid(M or settings.cert_grid_size, r_min or settings.cert_r_min)
    return grid.nodes[:-1], grid.descriptor()


def pde_margin(spec: SubSolutionSpec, tau_ratio: Number = 0, lambda_target: Optional[Number] = None) -> ExactMargin:
    """lambda - (Delta^2 u - rho Delta u)(1 - u)^2 as an exact power sum"""
    u = spec.profile
    operator = power_bilaplacian(u, spec.N)
    rho = as_rational(tau_ratio)
    if rho:
        operator = operator - rho * power_laplacian(u, spec.N)
    target = spec.lambda_prime if lambda_target is None else as_rational(lambda_target)
    return ExactMargin("pde", target - operator * spec.one_minus() ** 2)


def stability_margin(spec: SubSolutionSpec, weight: RadialWeight) -> ExactMargin:
    """W (1 - u)^3 - 2 sigma over the common (positive) denominator"""
    denominator = PowerSum.constant(1)
    for den in weight.denominators:
        denominator = denominator * den
    numerator = weight.numerator * spec.one_minus() ** 3 - 2 * spec.sigma * denominator
    return ExactMargin("stability", numerator, denominator)


def certify(
    spec: SubSolutionSpec,
    weight: RadialWeight,
    M: Optional[int] = None,
    r_min: Optional[float] = None,
    tau_ratio: Number = 0,
    lambda_target: Optional[Number] = None,
) -> CertificateReport:
    """
    Certify the pde and stability conditions of a sub-solution

    Args:
        spec: profile and constants
        weight: Hardy-Rellich weight, verified for a certified verdict
        M, r_min: sampling grid (settings default when omitted)
        tau_ratio: rho = tau / beta for the perturbed pde condition
        lambda_target: lambda'' replacing lambda' in the perturbed condition

    Returns:
        CertificateReport
    """
    if weight.N != spec.N:
        raise ConfigurationError(f"weight is for N={weight.N}, spec for N={spec.N}")
    perturbed = lambda_target is not None or as_rational(tau_ratio) != 0
    if perturbed:
        target = as_rational(lambda_target if lambda_target is not None else spec.lambda_prime)
        if not spec.lambda_prime <= target < spec.sigma:
            raise ConfigurationError("the perturbed certificate needs lambda' <= lambda'' < sigma")

    r, grid = _sample_radii(M, r_min)
    margins = {
        "pde": pde_margin(spec, tau_ratio, lambda_target),
        "stability": stability_margin(spec, weight),
    }

    sampled: Dict[str, Tuple[float, float]] = {}
    for name, margin in margins.items():
        values = margin.sample(r)
        i = int(np.argmin(values))
        sampled[name] = (float(values[i]), float(r[i]))

    endpoint = {name: margin.at_one() for name, margin in margins.items()}
    leading = {name: margin.leading_at_zero() for name, margin in margins.items()}
    crossover = {name: margin.crossover() for name, margin in margins.items()}

    u = spec.profile
    bc = (abs(float(u.value_at_one())), abs(float(power_laplacian(u, spec.N).value_at_one())))
    one_minus = spec.one_minus()
    lead = one_minus.leading()
    singular = lead is not None and bool(lead[1] > 0 and lead[0] > 0)
    range_ok = bool(np.all(u.evaluate(r) >= 0.0) and np.all(one_minus.evaluate(r) >= 0.0))

    violation = _first_violation(spec, sampled, endpoint, leading, bc, range_ok)
    if violation is not None:
        verdict = Verdict.VIOLATED
    elif not weight.verified:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.CERTIFIED

    extras: Dict[str, Any] = {}
    if perturbed:
        extras["perturbation"] = {
            "tau_ratio": float(as_rational(tau_ratio)),
            "lambda_target": float(target),
        }

    report = CertificateReport(
        spec=spec,
        weight_name=weight.name,
        weight_verified=weight.verified,
        pde_margin=sampled["pde"][0],
        pde_radius=sampled["pde"][1],
        stability_margin=sampled["stability"][0],
        stability_radius=sampled["stability"][1],
        endpoint=endpoint,
        leading=leading,
        crossover=crossover,
        bc_residuals=bc,
        singular=singular,
        range_ok=range_ok,
        grid=grid,
        verdict=verdict,
        violation=violation,
        extras=extras,
    )
    logger.info(
        "N=%d %s: pde margin %.6g, stability margin %.6g -> %s",
        spec.N, weight.name, report.pde_margin, report.stability_margin, verdict.value,
    )
    return report


def _first_violation(spec, sampled, endpoint, leading, bc, range_ok) -> Optional[Dict[str, Any]]:
    if spec.sigma <= spec.lambda_prime:
        return {"margin": "sigma_gap", "radius": None, "value": float(spec.sigma - spec.lambda_prime)}
    for name, (value, radius) in sampled.items():
        if value < 0.0:
            return {"margin": name, "radius": radius, "value": value}
    for name, value in endpoint.items():
        if value < 0.0:
            return {"margin": name, "radius": 1.0, "value": value}
    for name, info in leading.items():
        if info["sign"] < 0:
            return {"margin": name, "radius": 0.0, "value": info["coefficient"]}
    if any(bc):
        return {"margin": "boundary", "radius": 1.0, "value": max(bc)}
    if not range_ok:
        return {"margin": "range", "radius": None, "value": None}
    return None


def table1_verify(
    N: int,
    case: Optional[CertificationCase] = None,
    M: Optional[int] = None,
    r_min: Optional[float] = None,
    k_max: int = K_MAX,
    verify_weight: bool = True,
    tolerance: float = DEFAULT_TOLERANCE,
    lambda_prime: Optional[Number] = None,
    tau_ratio: Number = 0,
    lambda_target: Optional[Number] = None,
) -> CertificateReport:
    """
    Certify the tabulated sub-solution for dimension N

    The weight is verified by Rayleigh quotients first; large dimensions also
    check the a_{N,2} < 3 and 27 lambda_bar < H_N / 2 chain. lambda_prime
    replaces the tabulated value; tau_ratio and lambda_target switch to the
    perturbed PDE condition.
    """
    router = CaseRouter()
    case = case or router.route(N)
    params = router.parameters(N, case)
    if lambda_prime is None:
        lambda_prime = params.lambda_prime
    spec = SubSolutionSpec.build(N, params.m, lambda_prime, params.sigma, params.weight)
    weight = weight_by_name(params.weight, N)

    verification = None
    if verify_weight:
        verification = verify_weight_rayleigh(N, weight, k_max=k_max, tolerance=tolerance)
        if verification.passed:
            weight = weight.mark_verified("rayleigh")

    report = certify(spec, weight, M=M, r_min=r_min, tau_ratio=tau_ratio, lambda_target=lambda_target)
    extras: Dict[str, Any] = {"case": case.value}
    if verification is not None:
        extras["weight_verification"] = verification.to_dict()
    changes: Dict[str, Any] = {}

    if case is CertificationCase.LARGE_DIMENSION:
        chain = large_dimension_chain(N)
        extras["chain"] = chain
        if not chain["chain_holds"] and report.verdict is not Verdict.VIOLATED:
            changes = {
                "verdict": Verdict.VIOLATED,
                "violation": {"margin": "chain", "radius": None, "value": chain["27_lambda_bar"]},
            }
    return replace(report, extras={**report.extras, **extras}, **changes)


def tau_beta_margin(N: int, spec: SubSolutionSpec, lambda_target: Number, M: Optional[int] = None,
                    r_min: Optional[float] = None) -> float:
    """
    Largest rho = tau / beta with -rho Delta u <= (lambda'' - lambda') / (1 - u)^2 on (0, 1)

    The condition is linear in rho, so the answer is the slack divided by the
    largest value of (-Delta u)(1 - u)^2; +inf when -Delta u <= 0 throughout.
    """
    if N != spec.N:
        raise ConfigurationError(f"spec is for N={spec.N}, not {N}")
    target = as_rational(lambda_target)
    slack = target - spec.lambda_prime
    if slack == 0:
        return 0.0
    if not spec.lambda_prime < target < spec.sigma:
        raise ConfigurationError("tau margin needs lambda' < lambda'' < sigma")

    load = -power_laplacian(spec.profile, N) * spec.one_minus() ** 2
    lead = load.leading()
    if lead is not None and lead[1] < 0 and lead[0] > 0:
        return 0.0

    r, _ = _sample_radii(M, r_min)
    peak = max(float(np.max(load.evaluate(r))), float(load.value_at_one()))
    if lead is not None and lead[1] == 0:
        peak = max(peak, float(lead[0]))
    if peak <= 0.0:
        return math.inf
    rho = float(slack) / peak
    logger.info("N=%d: tau/beta margin %.6g for lambda''=%s", N, rho, target)
    return rho


def weight_pointwise_margin(N: int, weight: RadialWeight, M: Optional[int] = None,
                            r_min: Optional[float] = None) -> Dict[str, Any]:
    """
    min over (0, 1] of W (1 - w)^3 - 2 sigma for the tabulated profile of N

    Lets a weight be judged against the sub-solution it has to support,
    independently of the PDE condition.
    """
    spec = CaseRouter().build_spec(N)
    margin = stability_margin(spec, weight)
    r, grid = _sample_radii(M, r_min)
    values = margin.sample(r)
    i = int(np.argmin(values))
    at_one = margin.at_one()
    lead = margin.leading_at_zero()
    minimum = min(float(values[i]), at_one)
    return {
        "sigma": float(spec.sigma),
        "two_sigma": float(2 * spec.sigma),
        "profile_m": str(spec.m),
        "min_margin": minimum,
        "radius": float(r[i]) if minimum == float(values[i]) else 1.0,
        "at_one": at_one,
        "leading_at_zero": lead,
        "passed": minimum >= 0.0 and lead["sign"] >= 0,
        "grid": grid,
    }


def touchdown_profile_check(branch: BranchResult, N: int, beta: float) -> Dict[str, Any]:
    """
    Signed slack max_r (1 - u(r)) - C r^(4/3) at the last accepted point with
    C = (lambda*_high / (beta lambda_bar))^(1/3); diagnostic only
    """
    if branch.last is None:
        raise ConfigurationError("branch has no accepted points")
    constant = (branch.lambda_star_high / (beta * float(lambda_bar(N)))) ** (1.0 / 3.0)
    point = branch.last
    r = point.u.grid.nodes
    slack = (1.0 - point.u.values) - constant * r ** (4.0 / 3.0)
    worst = int(np.argmax(slack))
    return {
        "lambda": point.lam,
        "constant": constant,
        "slack": float(slack[worst]),
        "radius": float(r[worst]),
    }
