"""
Bessel-pair positivity test

(V, W) is a Bessel pair on (0, 1) when y'' + ((N-1)/r + V'/V) y' + (W/V) y = 0
has a positive solution there. The ODE is integrated in t = ln r from a
two-term local expansion of the dominant branch at r = 0, with the growth
r^s factored out so that the unknowns stay of order one.
"""

import cmath
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp

from backend.hardy_rellich.weights import (
    RadialWeight,
    factor_expansion,
    inverse_q,
    weight_inverse_square_t,
    weight_power,
    weight_w1,
    weight_w2,
    weight_w3,
)
from backend.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)

R_START = 1e-8
R_END = 1.0 - 1e-6
POSITIVITY_FLOOR = 1e-12


class PairVerdict(Enum):
    """Outcome of one ODE run"""
    POSITIVE = "positive"
    SIGN_CHANGE = "sign_change"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class BesselPairSpec:
    """A candidate pair (V, W) in dimension N on (0, R)"""

    V: RadialWeight
    W: RadialWeight
    N: int
    R: float = 1.0
    label: str = ""

    def __post_init__(self):
        if self.R != 1.0:
            raise ConfigurationError("Bessel pairs are tested on the unit interval only")
        if self.V.N != self.N or self.W.N != self.N:
            raise ConfigurationError("weights of a pair must share the dimension")

    @property
    def v_exponent(self) -> sp.Rational:
        return self.V.leading()[1]

    @property
    def inverse_flux_diverges(self) -> bool:
        """int_0 dr / (r^(N-1) V) = infinity"""
        return bool(self.v_exponent >= 2 - self.N)

    @property
    def mass_converges(self) -> bool:
        """int_0 r^(N-1) V dr < infinity"""
        return bool(self.v_exponent > -self.N)

    @property
    def hypotheses_hold(self) -> bool:
        return self.inverse_flux_diverges and self.mass_converges

    def describe(self) -> Dict[str, Any]:
        return {
            "label": self.label or f"({self.V.name}, {self.W.name})",
            "N": self.N,
            "V": self.V.name,
            "W": self.W.name,
            "inverse_flux_diverges": self.inverse_flux_diverges,
            "mass_converges": self.mass_converges,
        }


@dataclass(frozen=True, eq=False)
class ODESolution:
    """Samples of y and the positivity verdict (numerical evidence)"""

    r: np.ndarray
    y: np.ndarray
    verdict: PairVerdict
    sign_change_radius: Optional[float] = None
    sign_changes: int = 0
    exponent: float = 0.0
    message: str = ""
    meta: Dict[str, Any] = field(default_factory=dict)

    @property
    def positive(self) -> bool:
        return self.verdict is PairVerdict.POSITIVE

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "evidence": "numerical",
            "sign_changes": self.sign_changes,
            "first_sign_change": self.sign_change_radius,
            "leading_exponent": self.exponent,
            "r_range": [float(self.r[0]), float(self.r[-1])] if self.r.size else [],
            "message": self.message,
            **self.meta,
        }


def _inconclusive(message: str, **meta: Any) -> ODESolution:
    logger.warning("Bessel pair test inconclusive: %s", message)
    return ODESolution(r=np.empty(0), y=np.empty(0), verdict=PairVerdict.INCONCLUSIVE, message=message, meta=meta)


def _local_data(spec: BesselPairSpec) -> Tuple[float, float, float, float, float, float, bool]:
    """
    Indicial data at r = 0 for y_tt + (a - 1) y_t + b y = 0 (t = ln r)

    Returns:
        (a0, b0, a1, qa, b1, qb, strongly_singular) where a = a0 + a1 r^qa + ...
        and b = b0 + b1 r^qb + ...
    """
    v = spec.V.expansion()
    a0 = spec.N - 1 + float(v.exponent)
    if v.gap is not None:
        a1, qa = float(v.correction * v.gap), float(v.gap)
    else:
        a1, qa = 0.0, math.inf

    if spec.W.numerator.is_zero():
        return a0, 0.0, a1, qa, 0.0, math.inf, False

    ratio = factor_expansion(spec.W.factors() + [(f, -p) for f, p in spec.V.factors()])
    lead = ratio.exponent + 2
    if lead < 0:
        return a0, 0.0, a1, qa, 0.0, math.inf, True
    if lead == 0:
        b0 = float(ratio.coeff)
        if ratio.gap is not None:
            b1, qb = float(ratio.coeff * ratio.correction), float(ratio.gap)
        else:
            b1, qb = 0.0, math.inf
    else:
        b0, b1, qb = 0.0, float(ratio.coeff), float(lead)
    return a0, b0, a1, qa, b1, qb, False


def indicial_exponent(a0: float, b0: float) -> Tuple[float, bool]:
    """Larger root of s^2 + (a0 - 1) s + b0 (its real part when complex)"""
    disc = (a0 - 1.0) ** 2 - 4.0 * b0
    root = cmath.sqrt(disc)
    s = (-(a0 - 1.0) + root) / 2.0
    return float(s.real), disc < 0.0


def bessel_pair_test(
    spec: BesselPairSpec,
    r_start: float = R_START,
    r_end: float = R_END,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> ODESolution:
    """
    Integrate the pair's ODE on (r_start, r_end) and look for a sign change

    Args:
        spec: the candidate pair
        r_start: inner radius of the integration
        r_end: outer radius, just below 1
        rtol, atol: DOP853 tolerances

    Returns:
        ODESolution; failures of the integrator give an inconclusive verdict
    """
    flags = spec.describe()
    if not spec.hypotheses_hold:
        return _inconclusive("V violates the flux/mass hypotheses at r = 0", **flags)

    a0, b0, a1, qa, b1, qb, strongly_singular = _local_data(spec)
    if strongly_singular:
        return _inconclusive("W/V is more singular than r^-2 at the origin", **flags)

    s, oscillatory = indicial_exponent(a0, b0)
    q = min(qa, qb)
    c = 0.0
    if not oscillatory and math.isfinite(q):
        shifted = (s + q) ** 2 + (a0 - 1.0) * (s + q) + b0
        forcing = (b1 if qb == q else 0.0) + (a1 * s if qa == q else 0.0)
        if abs(shifted) > 1e-12 * (1.0 + abs(forcing)):
            c = -forcing / shifted

    if spec.W.numerator.is_zero():
        def b_of(r: float) -> float:
            return 0.0
    else:
        w_value, _ = spec.W.scalar_functions()
        v_value, _ = spec.V.scalar_functions()

        def b_of(r: float) -> float:
            return r * r * w_value(r) / v_value(r)

    _, v_log_slope = spec.V.scalar_functions()

    def rhs(t: float, state: np.ndarray) -> List[float]:
        r = math.exp(t)
        y_hat, p_hat = state
        a = spec.N - 1 + v_log_slope(r)
        return [p_hat - s * y_hat, -(a - 1.0) * p_hat - b_of(r) * y_hat - s * p_hat]

    def crossing(t: float, state: np.ndarray) -> float:
        return state[0]

    t0, t1 = math.log(r_start), math.log(r_end)
    tail = c * r_start**q if math.isfinite(q) else 0.0
    y0 = 1.0 + tail
    p0 = s * y0 + (q * tail if math.isfinite(q) else 0.0)

    try:
        sol = solve_ivp(rhs, (t0, t1), [y0, p0], method="DOP853", rtol=rtol, atol=atol, events=crossing)
    except (ValueError, ArithmeticError, OverflowError) as exc:
        return _inconclusive(f"integrator failed: {exc}", **flags)
    if sol.status == -1:
        return _inconclusive(f"integrator failed: {sol.message}", **flags)

    y_hat = sol.y[0]
    if not np.all(np.isfinite(y_hat)):
        return _inconclusive("non-finite values in the solution", **flags)

    r = np.exp(sol.t)
    events = sol.t_events[0]
    meta = {**flags, "start_correction": c, "oscillatory_indicial": oscillatory}
    if events.size:
        first = float(math.exp(events[0]))
        logger.debug("pair %s changes sign %d times, first at r=%.6g", flags["label"], events.size, first)
        return ODESolution(
            r=r, y=y_hat, verdict=PairVerdict.SIGN_CHANGE, sign_change_radius=first,
            sign_changes=int(events.size), exponent=s, message="solution changes sign", meta=meta,
        )
    if np.min(y_hat) <= POSITIVITY_FLOOR * np.max(np.abs(y_hat)):
        return ODESolution(
            r=r, y=y_hat, verdict=PairVerdict.INCONCLUSIVE, exponent=s,
            message="solution touches zero without a detected crossing", meta=meta,
        )
    return ODESolution(
        r=r, y=y_hat, verdict=PairVerdict.POSITIVE, exponent=s,
        message="positive on the sampled interval", meta=meta,
    )


def euler_pair(N: int, c: float) -> BesselPairSpec:
    """V = 1, W = c / r^2; positive exactly when c <= (N-2)^2 / 4"""
    return BesselPairSpec(
        V=weight_power(N, 1, 0, name="one"),
        W=weight_power(N, c, -2, name=f"{c}/r^2"),
        N=N,
        label=f"euler(c={c})",
    )


def inverse_square(N: int) -> RadialWeight:
    return weight_power(N, 1, -2, name="r^-2")


def constituent_pairs(weight_name: str, N: int) -> List[BesselPairSpec]:
    """First-order pairs whose combination gives the named second-order weight"""
    if weight_name in ("classical", "classical_6", "6"):
        coeff = sp.Rational((N - 4) ** 2, 4)
        return [
            BesselPairSpec(inverse_square(N), weight_power(N, coeff, -4, name="hardy_r4"), N, label="classical"),
        ]
    if weight_name in ("improved_31", "31"):
        return [
            BesselPairSpec(inverse_q(N), weight_w1(N), N, label="weighted_hardy_q"),
            BesselPairSpec(inverse_square(N), weight_inverse_square_t(N), N, label="weighted_hardy_t"),
        ]
    if weight_name in ("improved_32", "32"):
        return [
            BesselPairSpec(inverse_q(N), weight_w2(N), N, label="phi_q"),
            BesselPairSpec(inverse_square(N), weight_w3(N), N, label="phi_r2"),
        ]
    raise ConfigurationError(f"no constituent pairs for weight '{weight_name}'")
