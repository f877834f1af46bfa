"""Verification strategy design toolkit.

Plan dynamic verification campaigns for engineered systems: a Bayesian
confidence network scores how verification results bear on system
parameters, candidate campaigns are binary pass/fail strategy trees priced
in exact fixed-point money, and a parallel-tempering search finds
high-value trees from any mid-campaign state.
"""

from .bayesnet import BayesNetwork, load_network, posterior, save_network
from .errors import ConfigError, InfeasibleError
from .explorer import build_hvt, convergence_sweep, pt_optimizer
from .netgen import exemplar_network, random_network, satellite_network
from .ptengine import PtConfig, PtResult, build_ladder, run
from .scenario import Scenario, VerificationState, bundled_scenario, load_scenario
from .treespace import ForesightTree, HindsightTree, RawTree, TreeEvaluator

__version__ = "0.1.0"

__all__ = [
    "BayesNetwork",
    "ConfigError",
    "ForesightTree",
    "HindsightTree",
    "InfeasibleError",
    "PtConfig",
    "PtResult",
    "RawTree",
    "Scenario",
    "TreeEvaluator",
    "VerificationState",
    "build_hvt",
    "build_ladder",
    "bundled_scenario",
    "convergence_sweep",
    "exemplar_network",
    "load_network",
    "load_scenario",
    "posterior",
    "pt_optimizer",
    "random_network",
    "run",
    "satellite_network",
    "save_network",
    "__version__",
]
