"""HUNTER top-K/bottom-K scheduling plus the random and best-fit baselines."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol

import numpy as np

from .metrics import IntervalMetrics
from .model import DatacenterState, Host, SchedulingDecision, Task, TaskState
from .sustainability import performance_to_power
from .workload import CPU

log = logging.getLogger(__name__)

_TOL = 1e-12


@dataclass(frozen=True)
class SchedulerConfig:
    k: int | str = "auto"
    bandwidth: float = 100.0
    interval_length: float = 300.0
    min_container: float = 3000.0
    alpha: float = 1 / 3
    beta: float = 1 / 3
    gamma: float = 1 / 3
    cpu_cap: float = 0.8
    # fine-tuning step size; distinct from the SLAV weight ``gamma``
    learning_rate: float = 1e-4
    fine_tune: bool = True

    def __post_init__(self):
        weights = (self.alpha, self.beta, self.gamma)
        if min(weights) < 0 or abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError("objective weights must be non-negative and sum to 1")
        if self.k != "auto" and (not isinstance(self.k, int) or self.k < 1):
            raise ValueError("k must be a positive integer or 'auto'")
        if not 0 < self.cpu_cap <= 1:
            raise ValueError("cpu_cap must lie in (0, 1]")

    @property
    def resolved_k(self) -> int:
        if self.k == "auto":
            return compute_k(self.bandwidth, self.interval_length, self.min_container)
        return int(self.k)


@dataclass(frozen=True)
class QosRecord:
    aec: float
    at: float
    slav: float
    objective: float


def compute_k(bandwidth: float, interval_length: float, min_container: float) -> int:
    """Number of containers the network can move in one interval, at least 1."""
    return max(1, math.floor(bandwidth * interval_length / min_container + 1e-9))


def compute_objective(metrics: IntervalMetrics, weights: SchedulerConfig | tuple[float, float, float]) -> QosRecord:
    if isinstance(weights, SchedulerConfig):
        alpha, beta, gamma = weights.alpha, weights.beta, weights.gamma
    else:
        alpha, beta, gamma = weights
    aec = min(1.0, max(0.0, metrics.energy / metrics.energy_max))
    span = metrics.t_max - metrics.ambient
    temps = np.asarray(metrics.host_temps, dtype=float)
    at = float(np.mean(np.clip((temps - metrics.ambient) / span, 0.0, 1.0))) if temps.size else 0.0
    slav = metrics.slav
    return QosRecord(aec, at, slav, 1.0 - (alpha * aec + beta * at + gamma * slav))


class LoadView:
    """Tentative per-host load while a decision is being built."""

    def __init__(self, state: DatacenterState):
        self.hosts = state.hosts
        self.caps = np.array([h.cpu_capacity for h in state.hosts])
        self.demand = state.host_demands()
        self.ram, self.disk = state.host_reservations()
        self.where: dict[int, int | None] = {t.id: t.host for t in state.schedulable_tasks()}

    def load(self, host_id: int) -> float:
        return self.demand[host_id] / self.caps[host_id]

    def feasible(self, task: Task, host: Host, cpu_cap: float) -> bool:
        h = host.id
        if self.where.get(task.id) == h:
            return True
        d = task.demand()
        cpu = (self.demand[h] + d[CPU]) / self.caps[h]
        return (
            cpu <= cpu_cap + _TOL
            and self.ram[h] + task.ram_reservation <= host.ram_capacity * (1 + _TOL)
            and self.disk[h] + task.disk_reservation <= host.disk_capacity * (1 + _TOL)
        )

    def place(self, task: Task, host_id: int) -> None:
        src = self.where.get(task.id)
        if src == host_id:
            return
        cpu = task.demand()[CPU]
        if src is not None:
            # RAM/disk stay reserved on the source while the container migrates
            self.demand[src] -= cpu
        self.demand[host_id] += cpu
        self.ram[host_id] += task.ram_reservation
        self.disk[host_id] += task.disk_reservation
        self.where[task.id] = host_id


def feasible(task: Task, host: Host, state: DatacenterState | LoadView, cpu_cap: float = 0.8) -> bool:
    """Post-allocation CPU load within ``cpu_cap`` and RAM/disk reservations fit."""
    view = state if isinstance(state, LoadView) else LoadView(state)
    return view.feasible(task, host, cpu_cap)


def select_top_k_tasks(state: DatacenterState, k: int) -> list[Task]:
    """Unplaced tasks first, then tasks on the most power-hungry hosts."""
    power, cpu = state.usage.power, state.usage.cpu

    def key(t: Task):
        if t.state is TaskState.WAITING:
            return (0, 0.0, 0.0, t.id)
        return (1, -float(power[t.host]), -float(cpu[t.host]), t.id)

    return sorted(state.schedulable_tasks(), key=key)[:k]


def select_bottom_k_hosts(state: DatacenterState, k: int, cpu_cap: float = 0.8, view: LoadView | None = None) -> list[Host]:
    """Hosts below the CPU cap with the lowest performance-to-power ratio."""
    view = view or LoadView(state)
    ranked = []
    for h in state.hosts:
        load = view.load(h.id)
        if load >= cpu_cap:
            continue
        ranked.append((performance_to_power(h.power_profile, h.cpu_capacity, min(load, 1.0)), h.id, h))
    ranked.sort(key=lambda r: (r[0], r[1]))
    return [h for _, _, h in ranked[:k]]


class Surrogate(Protocol):
    def bind(self, state: DatacenterState) -> Callable[[list[dict[int, int]]], np.ndarray]:
        """Return a scorer mapping candidate allocations to QoS estimates."""


@dataclass
class Diagnostics:
    tasks_considered: int = 0
    hosts_considered: int = 0
    surrogate_evals: int = 0
    fallback: bool = False
    waited: list[int] = field(default_factory=list)


def hunter_schedule(surrogate: Surrogate, state: DatacenterState, config: SchedulerConfig) -> tuple[SchedulingDecision, Diagnostics]:
    k = config.resolved_k
    view = LoadView(state)
    tasks = select_top_k_tasks(state, k)
    hosts = sorted(select_bottom_k_hosts(state, k, config.cpu_cap, view), key=lambda h: h.id)
    diag = Diagnostics(len(tasks), len(hosts))
    assignments: dict[int, int] = {}
    if not tasks:
        return SchedulingDecision(assignments), diag
    if not hosts:
        diag.waited = [t.id for t in tasks if t.state is TaskState.WAITING]
        return SchedulingDecision(assignments), diag
    try:
        score = surrogate.bind(state)
        alloc = state.allocation()
        for task in tasks:
            candidates = []
            for h in hosts:
                cand = dict(alloc)
                cand[task.id] = h.id
                candidates.append(cand)
            values = np.asarray(score(candidates), dtype=float)
            diag.surrogate_evals += len(candidates)
            if values.shape != (len(candidates),) or not np.all(np.isfinite(values)):
                raise FloatingPointError("surrogate returned malformed scores")
            best = hosts[int(np.argmax(values))]
            if view.feasible(task, best, config.cpu_cap):
                if task.host != best.id:
                    assignments[task.id] = best.id
                view.place(task, best.id)
                alloc[task.id] = best.id
            elif task.state is TaskState.WAITING:
                diag.waited.append(task.id)
    except Exception as exc:  # noqa: BLE001 - any surrogate fault degrades to the baseline
        log.warning("surrogate failed at interval %d (%s); using best-fit", state.interval, exc)
        decision = baseline_bestfit(state, config.cpu_cap)
        diag.fallback = True
        return decision, diag
    return SchedulingDecision(assignments), diag


def baseline_random(state: DatacenterState, rng: np.random.Generator, cpu_cap: float = 0.8) -> SchedulingDecision:
    """Each waiting task (FIFO) goes to a uniformly chosen feasible host."""
    view = LoadView(state)
    assignments = {}
    for tid in state.wait_queue:
        task = state.tasks[tid]
        options = [h for h in state.hosts if view.feasible(task, h, cpu_cap)]
        if not options:
            continue
        host = options[int(rng.integers(len(options)))]
        view.place(task, host.id)
        assignments[tid] = host.id
    return SchedulingDecision(assignments)


def baseline_bestfit(state: DatacenterState, cpu_cap: float = 0.8) -> SchedulingDecision:
    """Each waiting task (FIFO) goes to the feasible host left with the least CPU headroom."""
    view = LoadView(state)
    assignments = {}
    for tid in state.wait_queue:
        task = state.tasks[tid]
        best, best_room = None, math.inf
        need = task.demand()[CPU]
        for h in state.hosts:
            if not view.feasible(task, h, cpu_cap):
                continue
            room = view.caps[h.id] - view.demand[h.id] - need
            if room < best_room:
                best, best_room = h, room
        if best is not None:
            view.place(task, best.id)
            assignments[tid] = best.id
    return SchedulingDecision(assignments)

