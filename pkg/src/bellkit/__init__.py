"""bellkit: numerical toolkit for Bell scenarios, self-testing and correlation-set witnesses."""

__version__ = "0.1.0"

from .exceptions import BellkitError, InvalidParameter, UnknownCommand  # noqa: E402
from .linalg import BipartiteState, apply_local, partial_trace, schmidt_decompose  # noqa: E402
from .scenario import (  # noqa: E402
    BellFunctional,
    Correlation,
    Measurement,
    Scenario,
    Strategy,
    bell_value,
    correlation_from_strategy,
    lhv_max_bruteforce,
)
from .seesaw import SeesawMaximizer, seesaw_maximize  # noqa: E402
from .selftest import SatwapSelfTest, extract_isometry  # noqa: E402

__all__ = [
    "BellFunctional",
    "BellkitError",
    "BipartiteState",
    "Correlation",
    "InvalidParameter",
    "Measurement",
    "SatwapSelfTest",
    "Scenario",
    "SeesawMaximizer",
    "Strategy",
    "UnknownCommand",
    "apply_local",
    "bell_value",
    "correlation_from_strategy",
    "extract_isometry",
    "lhv_max_bruteforce",
    "partial_trace",
    "schmidt_decompose",
    "seesaw_maximize",
]
