"""
Stackelberg hypergames for semantic communication resource allocation
"""

__author__ = "The semhyper authors"
from .__version__ import __version__
from .baselines import (
    solve_classical_no_reasoning,
    solve_complete_information,
    solve_hypergame,
    solve_naive_msse,
    solve_scheme,
)
from .config import load_scenario, save_scenario
from .core import run_experiment, summarize
from .hypergame import check_local_hse, play, run_hypergame
from .oracle import brute_force_oracle
from .scenario import generate_scenario, validate
from .types import (
    AcceptRule,
    BaselineResult,
    ConfigError,
    ExperimentConfig,
    PerceptionMode,
    Player,
    Role,
    RxStrategy,
    Scenario,
    Scheme,
    SemhyperError,
    TxStrategy,
    UpdateMode,
)
from .utilities import evaluate

__all__ = [
    "__author__",
    "__version__",
    "AcceptRule",
    "BaselineResult",
    "brute_force_oracle",
    "check_local_hse",
    "ConfigError",
    "evaluate",
    "ExperimentConfig",
    "generate_scenario",
    "load_scenario",
    "PerceptionMode",
    "play",
    "Player",
    "Role",
    "run_experiment",
    "run_hypergame",
    "RxStrategy",
    "save_scenario",
    "Scenario",
    "Scheme",
    "SemhyperError",
    "solve_classical_no_reasoning",
    "solve_complete_information",
    "solve_hypergame",
    "solve_naive_msse",
    "solve_scheme",
    "summarize",
    "TxStrategy",
    "UpdateMode",
    "validate",
]
