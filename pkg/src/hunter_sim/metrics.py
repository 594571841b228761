"""Per-interval QoS record and the summary statistics used by the harness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def jain_fairness(values: Sequence[float]) -> float:
    """Jain's index (sum x)^2 / (n sum x^2); 1.0 for empty or all-zero input."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return 1.0
    sq = float(np.sum(x * x))
    if sq == 0.0:
        return 1.0
    # rounding can push equal shares a few ulps above 1
    return min(1.0, float(np.sum(x)) ** 2 / (x.size * sq))


def coefficient_of_variation(series: Sequence[float]) -> float:
    """Population standard deviation over the mean."""
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("coefficient of variation of an empty series")
    mean = float(np.mean(x))
    if mean == 0.0:
        raise ZeroDivisionError("coefficient of variation undefined for zero mean")
    return float(np.std(x)) / mean


@dataclass
class IntervalMetrics:
    interval: int
    energy: float = 0.0
    # energy the hosts would draw at full load over the interval
    energy_max: float = 1.0
    cooling_energy: float = 0.0
    host_temps: tuple[float, ...] = ()
    ambient: float = 25.0
    t_max: float = 100.0
    cpu_util: tuple[float, ...] = ()
    ram_util: tuple[float, ...] = ()
    leaving_jobs: int = 0
    violated_jobs: int = 0
    completed_tasks: int = 0
    response_time: float = 0.0
    cost: float = 0.0
    wait_time: float = 0.0
    migration_time: float = 0.0
    migrations: int = 0
    active_tasks: int = 0
    waiting_tasks: int = 0
    scheduling_time: float = 0.0
    surrogate_evals: int = 0

    @property
    def avg_temp(self) -> float:
        return float(np.mean(self.host_temps)) if self.host_temps else self.ambient

    @property
    def max_temp(self) -> float:
        return float(np.max(self.host_temps)) if self.host_temps else self.ambient

    @property
    def slav(self) -> float:
        return self.violated_jobs / self.leaving_jobs if self.leaving_jobs else 0.0

    @property
    def fairness(self) -> float:
        return jain_fairness(self.cpu_util)

    @property
    def completed_jobs(self) -> int:
        return self.leaving_jobs
