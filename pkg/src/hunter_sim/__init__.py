"""Discrete-interval simulator for energy, thermal and SLA aware task
scheduling in a small cloud datacenter, with a graph-network surrogate."""

from .config import ExperimentConfig, load_config
from .harness import run_experiment
from .metrics import coefficient_of_variation, jain_fairness
from .model import DatacenterState, SchedulingDecision, step_interval
from .scheduler import SchedulerConfig, baseline_bestfit, baseline_random, compute_k, compute_objective, hunter_schedule

__version__ = "0.1.0"

__all__ = [
    "DatacenterState",
    "ExperimentConfig",
    "SchedulerConfig",
    "SchedulingDecision",
    "baseline_bestfit",
    "baseline_random",
    "coefficient_of_variation",
    "compute_k",
    "compute_objective",
    "hunter_schedule",
    "jain_fairness",
    "load_config",
    "run_experiment",
    "step_interval",
]
