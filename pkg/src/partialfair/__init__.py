"""Simulation engine for partially fair multiparty protocols.

The dealer model and its dealer-free compilation run against scripted
rushing adversaries; the analysis module compares them with an ideal-world
simulation and the closed-form bounds.
"""

from .adversary import ABORT, STRATEGY_NAMES, AdversaryStrategy, StrategyFactory, make_strategy
from .analysis import (
    BoundReport,
    EmpiricalDistribution,
    alpha_exact,
    bound_formulas,
    compare_real_ideal,
    exact_summary_distribution,
    guessing_probability,
    simulate_ideal_dealer,
    statistical_distance,
)
from .dealer import DOMAIN, RANGE, run_dealer_protocol
from .dealerless import run_mpc
from .errors import (
    CapacityError,
    ConfigError,
    DomainError,
    HarnessError,
    ParameterError,
    PartialFairError,
    ReconstructionError,
)
from .functionality import (
    BUILTINS,
    FunctionalitySpec,
    ProtocolConfig,
    qualifying_sets,
    rounds_for_domain,
    rounds_for_range,
)

__version__ = "0.1.0"

__all__ = [
    "ABORT",
    "BUILTINS",
    "BoundReport",
    "CapacityError",
    "ConfigError",
    "DOMAIN",
    "DomainError",
    "AdversaryStrategy",
    "EmpiricalDistribution",
    "FunctionalitySpec",
    "HarnessError",
    "ParameterError",
    "PartialFairError",
    "ProtocolConfig",
    "RANGE",
    "ReconstructionError",
    "STRATEGY_NAMES",
    "StrategyFactory",
    "alpha_exact",
    "bound_formulas",
    "compare_real_ideal",
    "exact_summary_distribution",
    "guessing_probability",
    "make_strategy",
    "qualifying_sets",
    "rounds_for_domain",
    "rounds_for_range",
    "run_dealer_protocol",
    "run_mpc",
    "simulate_ideal_dealer",
    "statistical_distance",
]
