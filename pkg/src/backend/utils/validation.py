"""
Validation of command-line parameters
Every check returns a tuple instead of raising
"""

import re
from typing import List, Optional, Tuple

from backend.solver.params import ProblemParams
from backend.utils.errors import ConfigurationError


class ParameterValidator:
    """Validate dimensions, ranges and grid controls"""

    DIMENSION_MIN = 2
    DIMENSION_MAX = 64
    RANGE_PATTERN = re.compile(r"^\s*(\d+)\s*(?:(?:\.\.|-|:)\s*(\d+))?\s*$")

    @staticmethod
    def parse_dimension_range(
        text: str, low: int = DIMENSION_MIN, high: int = DIMENSION_MAX
    ) -> Tuple[List[int], bool, Optional[str]]:
        """
        Parse "9", "5..12" or "16-30"

        Returns:
            (dimensions, is_valid, error_message)
        """
        if not text or not text.strip():
            return [], False, "Empty dimension range"

        match = ParameterValidator.RANGE_PATTERN.match(text)
        if not match:
            return [], False, f"Cannot parse dimension range '{text}'"

        start = int(match.group(1))
        stop = int(match.group(2)) if match.group(2) else start
        if stop < start:
            return [], False, f"Empty dimension range {start}..{stop}"
        if start < low or stop > high:
            return [], False, f"Dimensions must lie in {low}..{high}, got {start}..{stop}"

        return list(range(start, stop + 1)), True, None

    @staticmethod
    def validate_grid(grid_size: int, r_min: float) -> Tuple[bool, Optional[str]]:
        """
        Check grid controls

        Returns:
            (is_valid, error_message)
        """
        if grid_size < 16:
            return False, f"Grid needs at least 16 nodes, got {grid_size}"
        if not 0.0 < r_min < 1.0:
            return False, f"r_min must lie in (0, 1), got {r_min}"
        return True, None

    @staticmethod
    def validate_problem(
        N: int, beta: float, tau: float, alpha: float, gamma: float
    ) -> Tuple[bool, Optional[str]]:
        """
        Check operator coefficients and boundary data against ProblemParams

        Returns:
            (is_valid, error_message)
        """
        try:
            ProblemParams.build(N=N, beta=beta, tau=tau, alpha=alpha, gamma=gamma)
        except ConfigurationError as exc:
            return False, str(exc)
        return True, None
