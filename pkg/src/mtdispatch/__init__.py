"""Multi-task differential evolution for day-ahead dispatch of a coal-mine integrated energy system."""

from .config import RunConfig, load_config
from .model import DispatchProblem, Scenario, evaluate, evaluate_constraints, evaluate_objectives
from .multitask import RunResult, run
from .scenario import default_scenario, load_scenario, save_scenario

__all__ = [
    "DispatchProblem",
    "RunConfig",
    "RunResult",
    "Scenario",
    "default_scenario",
    "evaluate",
    "evaluate_constraints",
    "evaluate_objectives",
    "load_config",
    "load_scenario",
    "run",
    "save_scenario",
]
__version__ = "0.1.0"
