"""Exact finite-sample moments of Ornstein-Uhlenbeck drift estimators.

Closed-form transforms of the path functionals (:mod:`oufinite.transform`)
are integrated numerically (:mod:`oufinite.moments`) to give bias and mean
squared error without simulation; :mod:`oufinite.oracle` checks them by
Monte Carlo over exactly simulated paths (:mod:`oufinite.simulate`).
"""

__version__ = "0.1.0"

from .errors import OUError
from .model import EstimateReport, OUParams, Path, SufficientStats, rescale_to_unit_sigma, validate

__all__ = [
    "__version__",
    "OUError",
    "OUParams",
    "Path",
    "SufficientStats",
    "EstimateReport",
    "validate",
    "rescale_to_unit_sigma",
]
