"""
Problem parameters for beta Delta^2 u - tau Delta u = lambda / (1 - u)^2
on the unit ball with u = alpha, Delta u = gamma on the boundary
"""

import math
from typing import Any, Dict

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from backend.calculus.power_sum import Number, PowerSum, as_rational, rational_power
from backend.utils.errors import ConfigurationError


class ProblemParams(BaseModel):
    """Dimension, operator coefficients and admissible Navier data"""

    model_config = ConfigDict(frozen=True)

    N: int = Field(ge=2)
    beta: float = Field(1.0, gt=0.0)
    tau: float = Field(0.0, ge=0.0)
    alpha: float = Field(0.0, lt=1.0)
    gamma: float = Field(0.0, le=0.0)

    @field_validator("beta", "tau", "alpha", "gamma")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("must be finite")
        return value

    @classmethod
    def build(cls, **values: Any) -> "ProblemParams":
        """Validated construction that raises ConfigurationError"""
        try:
            return cls(**values)
        except ValidationError as exc:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc']) or 'params'}: {err['msg']}" for err in exc.errors()
            )
            raise ConfigurationError(f"inadmissible parameters: {problems}") from exc

    @property
    def homogeneous(self) -> bool:
        """(alpha, gamma) = (0, 0)"""
        return self.alpha == 0.0 and self.gamma == 0.0

    def with_updates(self, **changes: Any) -> "ProblemParams":
        return ProblemParams.build(**{**self.model_dump(), **changes})

    def rescaled(self, r1: float, u_r1: float, lap_r1: float) -> "ProblemParams":
        """
        Parameters solved by v(r) = r1^(-4/3) (u(r1 r) - 1) + 1 on the unit ball

        beta and lambda are unchanged, tau picks up r1^2 and the new boundary
        data come from u and Delta u at r1. Admissibility is checked again.
        """
        if not 0.0 < r1 <= 1.0:
            raise ConfigurationError(f"blow-up radius must lie in (0, 1], got {r1}")
        return self.with_updates(
            tau=r1**2 * self.tau,
            alpha=r1 ** (-4.0 / 3.0) * (u_r1 - 1.0) + 1.0,
            gamma=r1 ** (2.0 / 3.0) * lap_r1,
        )

    def describe(self) -> Dict[str, Any]:
        return self.model_dump()


def rescale_profile(u: PowerSum, r1: Number) -> PowerSum:
    """Exact image of u under v(r) = r1^(-4/3) (u(r1 r) - 1) + 1"""
    s = as_rational(r1)
    if not 0 < s <= 1:
        raise ConfigurationError(f"blow-up radius must lie in (0, 1], got {r1}")
    return (u.scaled_argument(s) - 1) * rational_power(s, "-4/3") + 1
