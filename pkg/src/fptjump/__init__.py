"""First-passage time, overshoot and undershoot of a drifted Brownian motion with compound Poisson jumps.

Modules:

* :mod:`fptjump.jump_law`     jump-size distributions (atoms plus densities)
* :mod:`fptjump.closed_form`  analytic kernels and time-zero limits
* :mod:`fptjump.path_sim`     exact skeleton simulation of the hitting event
* :mod:`fptjump.estimators`   conditioned Monte Carlo estimators of the density and joint law
* :mod:`fptjump.oracle`       brute-force grid simulator and histogram tests
* :mod:`fptjump.cli`          the ``fpt`` command
"""

from __future__ import annotations

from .errors import ConfigSemanticError, ConfigSyntaxError, NumericalError, UsageError
from .jump_law import JumpLaw
from .path_sim import HittingRecord, ModelParams, Status
from .sharding import Estimate

__all__ = [
    "ConfigSemanticError",
    "ConfigSyntaxError",
    "Estimate",
    "HittingRecord",
    "JumpLaw",
    "ModelParams",
    "NumericalError",
    "Status",
    "UsageError",
]

__version__ = "0.1.0"
