"""Domain types and the discrete-interval datacenter state machine."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .metrics import IntervalMetrics
from .sustainability import (
    CoolingParams,
    EnergyParams,
    HostActivity,
    PowerProfile,
    ThermalParams,
    crac_inlet,
    host_power,
    host_temperature,
    processor_dynamic_power,
    total_energy,
)
from .workload import CPU, DISK, DISK_READ, DISK_WRITE, NET, RAM, NewJobBatch

_DONE_EPS = 1e-9


class StructuralError(RuntimeError):
    """A decision or state that can only come from a programming bug."""


class TaskState(enum.Enum):
    WAITING = "waiting"
    ALLOCATED = "allocated"
    MIGRATING = "migrating"
    COMPLETED = "completed"


@dataclass
class Host:
    id: int
    name: str
    cores: int
    ips_per_core: float
    ram_capacity: float
    disk_capacity: float
    bandwidth_capacity: float
    energy: EnergyParams
    power_profile: PowerProfile
    price_per_hour: float = 0.0
    is_private: bool = True
    network_latency: float = 0.0
    temperature: float = 25.0

    def __post_init__(self):
        if self.cores < 1:
            raise ValueError(f"host {self.id}: cores must be >= 1")
        for name in ("ips_per_core", "ram_capacity", "disk_capacity", "bandwidth_capacity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"host {self.id}: {name} must be positive")

    @property
    def cpu_capacity(self) -> float:
        return self.cores * self.ips_per_core

    @property
    def max_power(self) -> float:
        return host_power(self.energy, self.cores, 1.0, 1.0, 1.0)

    @property
    def idle_power(self) -> float:
        return host_power(self.energy, self.cores, 0.0)

    @property
    def max_dynamic_power(self) -> float:
        return processor_dynamic_power(self.energy, [1.0] * self.cores)


@dataclass
class Task:
    id: int
    job_id: int
    trace: np.ndarray = field(repr=False)
    container_size: float
    sla_deadline: float
    created_at: int
    state: TaskState = TaskState.WAITING
    host: int | None = None
    destination: int | None = None
    progress: float = 0.0
    allocated_at: int | None = None
    completed_at: int | None = None
    migrations: int = 0

    @property
    def ram_reservation(self) -> float:
        return float(self.trace[:, RAM].max())

    @property
    def disk_reservation(self) -> float:
        return float(self.trace[:, DISK].max())

    @property
    def remaining(self) -> float:
        return max(0.0, len(self.trace) - self.progress)

    def demand(self) -> np.ndarray:
        """Resource row the task requests in the coming interval."""
        return self.trace[min(int(self.progress + _DONE_EPS), len(self.trace) - 1)]


@dataclass
class Job:
    id: int
    task_ids: tuple[int, ...]
    sla_deadline: float
    arrival_interval: int
    category: str = ""

    def __post_init__(self):
        if not 3 <= len(self.task_ids) <= 5:
            raise ValueError(f"job {self.id}: needs 3-5 tasks, got {len(self.task_ids)}")


@dataclass(frozen=True)
class SchedulingDecision:
    """Partial map task id -> host id for the coming interval."""

    assignments: dict[int, int] = field(default_factory=dict)

    def __len__(self):
        return len(self.assignments)


@dataclass(frozen=True)
class SimEnvironment:
    interval_length: float = 300.0
    cooling: CoolingParams = CoolingParams()
    thermal: ThermalParams = ThermalParams()


@dataclass
class HostUsage:
    """Per-host utilization measured over the last executed interval."""

    cpu: np.ndarray
    ram: np.ndarray
    disk: np.ndarray
    bandwidth: np.ndarray
    power: np.ndarray

    @classmethod
    def idle(cls, hosts: list[Host]) -> "HostUsage":
        n = len(hosts)
        z = np.zeros(n)
        return cls(z.copy(), z.copy(), z.copy(), z.copy(), np.array([h.idle_power for h in hosts]))


@dataclass
class DatacenterState:
    hosts: list[Host]
    env: SimEnvironment = SimEnvironment()
    tasks: dict[int, Task] = field(default_factory=dict)
    jobs: dict[int, Job] = field(default_factory=dict)
    wait_queue: list[int] = field(default_factory=list)
    new_jobs: list[int] = field(default_factory=list)
    interval: int = 0
    usage: HostUsage | None = None
    next_task_id: int = 0
    next_job_id: int = 0
    created_tasks: int = 0
    completed_tasks: int = 0
    completed_jobs: int = 0

    def __post_init__(self):
        if [h.id for h in self.hosts] != list(range(len(self.hosts))):
            raise ValueError("host ids must be 0..n-1 in order")
        if self.usage is None:
            self.usage = HostUsage.idle(self.hosts)
        for h in self.hosts:
            h.temperature = max(h.temperature, self.env.thermal.ambient)

    @property
    def interval_length(self) -> float:
        return self.env.interval_length

    def copy(self) -> "DatacenterState":
        # traces are never mutated, so Task copies share them
        return replace(
            self,
            hosts=[replace(h) for h in self.hosts],
            tasks={k: replace(t) for k, t in self.tasks.items()},
            jobs={k: replace(j) for k, j in self.jobs.items()},
            wait_queue=list(self.wait_queue),
            new_jobs=list(self.new_jobs),
            usage=replace(self.usage),
        )

    def admit(self, batch: NewJobBatch) -> None:
        """Create jobs and waiting tasks for a new arrival batch (in place)."""
        self.new_jobs = []
        for spec in batch.jobs:
            jid = self.next_job_id
            self.next_job_id += 1
            ids = []
            for ts in spec.tasks:
                tid = self.next_task_id
                self.next_task_id += 1
                self.tasks[tid] = Task(tid, jid, ts.trace, ts.container_size, spec.sla_deadline, self.interval)
                self.wait_queue.append(tid)
                ids.append(tid)
            self.created_tasks += len(ids)
            self.jobs[jid] = Job(jid, tuple(ids), spec.sla_deadline, self.interval, spec.category)
            self.new_jobs.append(jid)

    def allocation(self) -> dict[int, int]:
        return {t.id: t.host for t in self.tasks.values() if t.state is TaskState.ALLOCATED}

    def schedulable_tasks(self) -> list[Task]:
        """Tasks the scheduler may place or move: waiting ones and running ones."""
        return [t for t in self.tasks.values() if t.state in (TaskState.WAITING, TaskState.ALLOCATED)]

    def count(self, state: TaskState) -> int:
        if state is TaskState.COMPLETED:
            return self.completed_tasks
        return sum(1 for t in self.tasks.values() if t.state is state)

    def job_status(self, job_id: int) -> str:
        job = self.jobs.get(job_id)
        if job is None:
            return "completed"
        states = [self.tasks[i].state for i in job.task_ids if i in self.tasks]
        if any(s in (TaskState.ALLOCATED, TaskState.MIGRATING) for s in states):
            return "active"
        if any(self.tasks[i].allocated_at is not None for i in job.task_ids if i in self.tasks):
            # remaining tasks wait while completed siblings are gone
            return "active"
        return "new" if job.arrival_interval == self.interval else "waiting"

    def host_demands(self) -> np.ndarray:
        """Projected CPU demand (IPS) per host for the coming interval."""
        d = np.zeros(len(self.hosts))
        for t in self.tasks.values():
            if t.state is TaskState.ALLOCATED:
                d[t.host] += t.demand()[CPU]
        return d

    def host_reservations(self) -> tuple[np.ndarray, np.ndarray]:
        ram = np.zeros(len(self.hosts))
        disk = np.zeros(len(self.hosts))
        for t in self.tasks.values():
            if t.state in (TaskState.ALLOCATED, TaskState.MIGRATING):
                ram[t.host] += t.ram_reservation
                disk[t.host] += t.disk_reservation
                if t.state is TaskState.MIGRATING:
                    ram[t.destination] += t.ram_reservation
                    disk[t.destination] += t.disk_reservation
        return ram, disk


def migration_cost(task: Task, src: Host, dst: Host, interval_length: float) -> float:
    """Seconds to checkpoint-transfer-restore a container, capped at one interval."""
    if src.id == dst.id:
        raise ValueError("migration source and destination are the same host")
    seconds = task.container_size / min(src.bandwidth_capacity, dst.bandwidth_capacity) + dst.network_latency
    return min(seconds, interval_length)


def _apply_decision(state: DatacenterState, decision: SchedulingDecision):
    t_now = state.interval
    length = state.interval_length
    waits, migrations = [], []
    placed = set()
    for tid, hid in sorted(decision.assignments.items()):
        task = state.tasks.get(tid)
        if task is None:
            raise StructuralError(f"decision references unknown task {tid}")
        if not 0 <= hid < len(state.hosts):
            raise StructuralError(f"decision references unknown host {hid}")
        if task.state is TaskState.WAITING:
            task.state = TaskState.ALLOCATED
            task.host = hid
            if task.allocated_at is None:
                task.allocated_at = t_now
            waits.append((t_now - task.created_at) * length)
            placed.add(tid)
        elif task.state is TaskState.ALLOCATED:
            if task.host != hid:
                cost = migration_cost(task, state.hosts[task.host], state.hosts[hid], length)
                task.state = TaskState.MIGRATING
                task.destination = hid
                task.migrations += 1
                migrations.append((task, cost))
        else:
            raise StructuralError(f"task {tid} is {task.state.value} and cannot be scheduled")
    if placed:
        state.wait_queue = [i for i in state.wait_queue if i not in placed]
    ram, disk = state.host_reservations()
    for h in state.hosts:
        if ram[h.id] > h.ram_capacity * (1 + 1e-12) or disk[h.id] > h.disk_capacity * (1 + 1e-12):
            raise StructuralError(f"decision overflows RAM/disk of host {h.id}")
    return waits, migrations


def step_interval(
    state: DatacenterState,
    decision: SchedulingDecision,
    workload: NewJobBatch | None = None,
) -> tuple[DatacenterState, IntervalMetrics]:
    """Apply ``decision``, execute one interval, then admit ``workload``.

    Returns the successor state (the input is not modified) and the metrics
    of the executed interval.
    """
    s = state.copy()
    env = s.env
    length = env.interval_length
    n = len(s.hosts)
    waits, migrations = _apply_decision(s, decision)
    downtime = {task.id: cost / length for task, cost in migrations}

    running = [t for t in s.tasks.values() if t.state in (TaskState.ALLOCATED, TaskState.MIGRATING)]
    rows = {t.id: t.demand() for t in running}
    cpu_demand = np.zeros(n)
    ram = np.zeros(n)
    disk = np.zeros(n)
    net = np.zeros(n)
    read = np.zeros(n)
    write = np.zeros(n)
    busy = np.zeros(n, dtype=bool)
    for t in running:
        r = rows[t.id]
        cpu_demand[t.host] += r[CPU]
        ram[t.host] += r[RAM]
        disk[t.host] += r[DISK]
        net[t.host] += r[NET]
        read[t.host] += r[DISK_READ]
        write[t.host] += r[DISK_WRITE]
        busy[t.host] = True
    for task, _ in migrations:
        traffic = task.container_size / length
        net[task.host] += traffic
        net[task.destination] += traffic
        busy[task.destination] = True

    caps = np.array([h.cpu_capacity for h in s.hosts])
    scale = np.where(cpu_demand > caps, caps / np.maximum(cpu_demand, 1e-300), 1.0)
    for t in running:
        t.progress += scale[t.host] * (1.0 - downtime.get(t.id, 0.0))

    bw_cap = np.array([h.bandwidth_capacity for h in s.hosts])
    cpu_util = np.minimum(cpu_demand, caps) / caps
    ram_util = ram / np.array([h.ram_capacity for h in s.hosts])
    disk_util = disk / np.array([h.disk_capacity for h in s.hosts])
    bw_util = np.minimum(1.0, net / bw_cap)
    read_act = np.minimum(1.0, read / bw_cap)
    write_act = np.minimum(1.0, write / bw_cap)

    activities = [HostActivity(h.energy, h.cores, float(cpu_util[h.id]), float(read_act[h.id]), float(write_act[h.id])) for h in s.hosts]
    breakdown = total_energy(activities, env.cooling, length)
    max_dyn = sum(h.max_dynamic_power for h in s.hosts)
    inlet = crac_inlet(env.thermal, sum(breakdown.host_dynamic_power), max_dyn)
    for h, p_dyn in zip(s.hosts, breakdown.host_dynamic_power):
        h.temperature = host_temperature(env.thermal, p_dyn, env.thermal.ambient, inlet)

    s.usage = HostUsage(cpu_util, ram_util, disk_util, bw_util, np.array(breakdown.host_computing) / length)

    # completion
    t_now = s.interval
    finished = []
    for t in running:
        if t.progress >= len(t.trace) - _DONE_EPS:
            finished.append(t)
        elif t.state is TaskState.MIGRATING:
            t.state = TaskState.ALLOCATED
            t.host = t.destination
            t.destination = None
    for t in finished:
        t.state = TaskState.COMPLETED
        t.completed_at = t_now
        t.host = t.destination = None
        del s.tasks[t.id]
    s.completed_tasks += len(finished)

    leaving, violated, responses = 0, 0, []
    for jid in sorted({t.job_id for t in finished}):
        job = s.jobs[jid]
        if all(i not in s.tasks for i in job.task_ids):
            response = (t_now - job.arrival_interval + 1) * length
            responses.append(response)
            leaving += 1
            violated += response > job.sla_deadline
            del s.jobs[jid]
    s.completed_jobs += leaving

    energy_max = length * sum(h.max_power for h in s.hosts)
    cost = float(sum(h.price_per_hour for h in s.hosts if busy[h.id])) * length / 3600.0
    metrics = IntervalMetrics(
        interval=t_now,
        energy=breakdown.total,
        energy_max=energy_max,
        cooling_energy=breakdown.cooling,
        host_temps=tuple(h.temperature for h in s.hosts),
        ambient=env.thermal.ambient,
        t_max=env.thermal.t_max,
        cpu_util=tuple(float(x) for x in cpu_util),
        ram_util=tuple(float(x) for x in ram_util),
        leaving_jobs=leaving,
        violated_jobs=int(violated),
        completed_tasks=len(finished),
        response_time=float(np.mean(responses)) if responses else 0.0,
        cost=cost,
        wait_time=float(np.mean(waits)) if waits else 0.0,
        migration_time=float(np.mean([c for _, c in migrations])) if migrations else 0.0,
        migrations=len(migrations),
        active_tasks=len(running),
        waiting_tasks=len(s.wait_queue),
    )

    s.interval += 1
    s.new_jobs = []
    if workload is not None:
        s.admit(workload)
    return s, metrics
