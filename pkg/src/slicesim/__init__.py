"""slicesim: seedable small-cell slicing simulator and optimizers.

The package models a venue owner leasing radio resource blocks to tenant
operators: random deployments and channel gains (``scenario``), link rates
under uniform block choices (``radio``), per-station transmit-power learning
(``qlearning``), an MCMC search over slice-to-operator matchings
(``matching``), edge-offloading delays with a budgeted caching purchase
(``mec``), and brute-force references for desk-scale instances (``oracle``).
"""

from . import matching, mec, oracle, qlearning, radio, scenario
from .matching import Matching, MatchingConfig, mcmc_swap, social_welfare
from .mec import MecConfig, fractional_knapsack
from .qlearning import QLearningConfig, run_qlearning
from .radio import PowerAssignment, RateReport
from .scenario import NetworkTopology, ScenarioConfig, generate_topology

__version__ = "0.1.0"

__all__ = [
    "Matching",
    "MatchingConfig",
    "MecConfig",
    "NetworkTopology",
    "PowerAssignment",
    "QLearningConfig",
    "RateReport",
    "ScenarioConfig",
    "fractional_knapsack",
    "generate_topology",
    "matching",
    "mcmc_swap",
    "mec",
    "oracle",
    "qlearning",
    "radio",
    "run_qlearning",
    "scenario",
    "social_welfare",
    "__version__",
]
