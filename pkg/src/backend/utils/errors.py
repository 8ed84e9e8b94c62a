"""
Exception hierarchy for the laboratory
Verdicts are returned as values; these signal failures to compute
"""

from typing import Any, Optional


class MemsLabError(Exception):
    """Base class for all laboratory errors"""


class ConfigurationError(MemsLabError, ValueError):
    """Invalid grid, parameter or range"""


class EvaluationError(MemsLabError, ArithmeticError):
    """Non-finite sample or evaluation outside the domain"""


class SolverFailure(MemsLabError):
    """Linear or nonlinear solve could not be completed"""


class NonConvergence(SolverFailure):
    """Monotone iteration left the safe region or ran out of iterations"""

    def __init__(self, lam: float, reason: str, sup_norm: float, iterations: int):
        self.lam = lam
        self.reason = reason
        self.sup_norm = sup_norm
        self.iterations = iterations
        super().__init__(
            f"no convergence at lambda={lam:.6g}: {reason} "
            f"(sup u={sup_norm:.6g} after {iterations} iterations)"
        )


class BracketError(SolverFailure):
    """Inconsistent pull-in bracket"""


class SpectralFailure(MemsLabError):
    """Inverse iteration did not converge"""

    def __init__(self, message: str, last_iterate: Optional[Any] = None, mu: float = float("nan")):
        self.last_iterate = last_iterate
        self.mu = mu
        super().__init__(message)


class InvalidWeight(MemsLabError, ValueError):
    """Weight is not positive where it has to be"""


class WeightConstructionError(InvalidWeight):
    """Sign failure found while building a weight"""


class WeightVerificationError(MemsLabError):
    """Rayleigh quotient fell below the tolerance band"""

    def __init__(self, message: str, minimizer: Optional[Any] = None):
        self.minimizer = minimizer
        super().__init__(message)
