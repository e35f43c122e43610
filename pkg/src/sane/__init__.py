"""Bayesian optimization that discovers and balances several optima.

The package couples a Gaussian-process surrogate with a strategic
acquisition rule that switches between exploiting known regions of
interest and exploring away from them, plus an optional gate learned from
human good/bad labels of the initial samples.
"""

from .engine import SANE, VANILLA, SaneConfig, Trace, run, run_seed_sweep
from .errors import ConfigError, SaneError
from .problem import BlackBox, ParameterSpace

__version__ = "0.1.0"

__all__ = ["SANE", "VANILLA", "BlackBox", "ConfigError", "ParameterSpace", "SaneConfig", "SaneError", "Trace",
           "run", "run_seed_sweep"]
