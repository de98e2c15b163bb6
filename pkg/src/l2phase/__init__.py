"""L2 discretization of the Caputo derivative and energy-stable schemes for
time-fractional Allen-Cahn and Cahn-Hilliard equations."""

from .caputo import History, TimeGrid, l2_apply, l2_apply_reformulated, l2_split
from .coeffs import CoeffTable, build_coeff_table, coeff_abc, coeff_d, coeff_r1
from .config import ConfigError, RunConfig
from .schemes import RunResult, SchemeError, run
from .spectral import Grid2D, ModelSpec

__all__ = [
    "CoeffTable",
    "ConfigError",
    "Grid2D",
    "History",
    "ModelSpec",
    "RunConfig",
    "RunResult",
    "SchemeError",
    "TimeGrid",
    "build_coeff_table",
    "coeff_abc",
    "coeff_d",
    "coeff_r1",
    "l2_apply",
    "l2_apply_reformulated",
    "l2_split",
    "run",
]

__version__ = "0.1.0"
