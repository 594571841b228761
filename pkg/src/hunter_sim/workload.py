"""Job arrivals and utilization traces.

A trace is a float array of shape ``(intervals, 8)`` with the columns in
:data:`TRACE_FIELDS`. Jobs arrive as Poisson(lambda) per interval; each job
draws one trace and splits it evenly across 3-5 tasks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TRACE_FIELDS = (
    "cpu_ips",
    "ram_mb",
    "ram_read",
    "ram_write",
    "disk_mb",
    "disk_read",
    "disk_write",
    "net_mbps",
)
CPU, RAM, RAM_READ, RAM_WRITE, DISK, DISK_READ, DISK_WRITE, NET = range(8)


class WorkloadError(ValueError):
    pass


class TraceFormatError(WorkloadError):
    pass


@dataclass(frozen=True)
class SyntheticCategory:
    """Generator settings for one synthetic trace category.

    ``means`` holds the mean value of each trace field for a trace scaled at
    1.0; each trace draws its own scale from ``scale_range``.
    """

    means: tuple[float, ...]
    scale_range: tuple[float, float] = (0.5, 1.5)
    amplitude: float = 0.3
    period: float = 8.0
    noise: float = 0.05
    length_range: tuple[int, int] = (4, 16)
    count: int = 40


DEFAULT_CATEGORIES = {
    # CPU-bound, bursty
    "rnd": SyntheticCategory(
        means=(2200.0, 1200.0, 4.0, 2.0, 800.0, 2.0, 1.0, 3.0),
        amplitude=0.35,
    ),
    # storage heavy, steadier CPU
    "fastStorage": SyntheticCategory(
        means=(1600.0, 1600.0, 6.0, 4.0, 3000.0, 12.0, 8.0, 5.0),
        amplitude=0.2,
    ),
}


@dataclass(frozen=True)
class WorkloadConfig:
    arrival_rate: float = 1.2
    tasks_per_job: tuple[int, int] = (3, 5)
    interval_length: float = 300.0
    sla_base: float = 1.0
    sla_factor: float = 1.5
    container_size: tuple[float, float] = (3000.0, 6000.0)
    seed: int = 0

    def __post_init__(self):
        if not self.arrival_rate > 0:
            raise WorkloadError("arrival_rate must be positive")
        lo, hi = self.tasks_per_job
        if not 3 <= lo <= hi <= 5:
            raise WorkloadError("tasks_per_job must lie within [3, 5]")
        if self.container_size[0] < 0 or self.container_size[1] < self.container_size[0]:
            raise WorkloadError("container_size must be a non-negative range")


@dataclass(frozen=True)
class TaskSpec:
    trace: np.ndarray = field(repr=False)
    container_size: float


@dataclass(frozen=True)
class JobSpec:
    category: str
    tasks: tuple[TaskSpec, ...]
    sla_deadline: float
    arrival_interval: int

    @property
    def nominal_runtime(self) -> int:
        return max(len(t.trace) for t in self.tasks)


@dataclass(frozen=True)
class NewJobBatch:
    interval: int
    jobs: tuple[JobSpec, ...] = ()

    def __len__(self):
        return len(self.jobs)


TracePool = dict  # category name -> list of (L, 8) arrays


def validate_trace(trace: np.ndarray, where: str = "trace") -> np.ndarray:
    trace = np.asarray(trace, dtype=float)
    if trace.ndim != 2 or trace.shape[1] != len(TRACE_FIELDS):
        raise TraceFormatError(f"{where}: expected shape (n, {len(TRACE_FIELDS)}), got {trace.shape}")
    if len(trace) == 0:
        raise TraceFormatError(f"{where}: trace has no rows")
    if not np.all(np.isfinite(trace)) or np.any(trace < 0):
        row = int(np.argwhere(~np.isfinite(trace) | (trace < 0))[0, 0])
        raise TraceFormatError(f"{where}: row {row + 1} has a negative or non-finite value")
    return trace


def read_trace_csv(path: str | Path) -> np.ndarray:
    path = Path(path)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TRACE_FIELDS:
            raise TraceFormatError(f"{path}: header must be {','.join(TRACE_FIELDS)}")
        for rowno, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != len(TRACE_FIELDS):
                raise TraceFormatError(f"{path}: row {rowno}: expected {len(TRACE_FIELDS)} values, got {len(row)}")
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise TraceFormatError(f"{path}: row {rowno}: non-numeric value") from None
            if any(v < 0 or not math.isfinite(v) for v in values):
                raise TraceFormatError(f"{path}: row {rowno}: negative or non-finite value")
            rows.append(values)
    if not rows:
        raise TraceFormatError(f"{path}: trace has no rows")
    return np.array(rows, dtype=float)


def write_trace_csv(path: str | Path, trace: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_FIELDS)
        for row in trace:
            writer.writerow([repr(float(v)) for v in row])


def load_traces(path: str | Path) -> TracePool:
    """Load a directory of trace CSVs.

    Sub-directories become categories; CSV files directly under ``path`` go
    into a category named after ``path`` itself.
    """
    root = Path(path)
    if not root.is_dir():
        raise WorkloadError(f"trace directory {root} does not exist")
    pool: TracePool = {}
    direct = sorted(root.glob("*.csv"))
    if direct:
        pool[root.name] = [read_trace_csv(p) for p in direct]
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        files = sorted(sub.glob("*.csv"))
        if files:
            pool[sub.name] = [read_trace_csv(p) for p in files]
    if not pool:
        raise WorkloadError(f"no trace CSV files under {root}")
    return pool


def synthetic_trace(
    rng: np.random.Generator,
    length: int,
    means,
    amplitude: float = 0.3,
    period: float = 8.0,
    noise: float = 0.05,
) -> np.ndarray:
    """Sinusoid-plus-noise trace whose per-field mean is ``means``."""
    means = np.asarray(means, dtype=float)
    t = np.arange(length)[:, None]
    phase = rng.uniform(0, 2 * np.pi, size=(1, len(means)))
    wave = 1.0 + amplitude * np.sin(2 * np.pi * t / period + phase)
    trace = means * (wave + noise * rng.standard_normal((length, len(means))))
    return np.clip(trace, 0.0, None)


def synthetic_pool(seed: int, categories: dict[str, SyntheticCategory] | None = None) -> TracePool:
    categories = DEFAULT_CATEGORIES if categories is None else categories
    rng = np.random.default_rng([seed, 0x7A11])
    pool: TracePool = {}
    for name in sorted(categories):
        cat = categories[name]
        traces = []
        for _ in range(cat.count):
            length = int(rng.integers(cat.length_range[0], cat.length_range[1] + 1))
            scale = rng.uniform(*cat.scale_range)
            traces.append(synthetic_trace(rng, length, np.asarray(cat.means) * scale, cat.amplitude, cat.period, cat.noise))
        pool[name] = traces
    return pool


def split_trace(trace: np.ndarray, parts: int) -> list[np.ndarray]:
    """Even split; the floating-point remainder goes to the first part."""
    share = trace / parts
    first = trace - share * (parts - 1)
    return [first] + [share.copy() for _ in range(parts - 1)]


def arrival_rng(config: WorkloadConfig, interval: int) -> np.random.Generator:
    return np.random.default_rng([config.seed, interval])


def generate_arrivals(config: WorkloadConfig, interval: int, pool: TracePool, rng: np.random.Generator | None = None) -> NewJobBatch:
    if not pool or not any(pool.values()):
        raise WorkloadError("trace pool is empty")
    if rng is None:
        rng = arrival_rng(config, interval)
    categories = sorted(k for k, v in pool.items() if v)
    n = int(rng.poisson(config.arrival_rate))
    jobs = []
    for _ in range(n):
        cat = categories[int(rng.integers(len(categories)))]
        traces = pool[cat]
        trace = traces[int(rng.integers(len(traces)))]
        k = int(rng.integers(config.tasks_per_job[0], config.tasks_per_job[1] + 1))
        sizes = rng.uniform(config.container_size[0], config.container_size[1], size=k)
        tasks = tuple(TaskSpec(part, float(s)) for part, s in zip(split_trace(trace, k), sizes))
        deadline = config.interval_length * (config.sla_base + config.sla_factor * len(trace))
        jobs.append(JobSpec(cat, tasks, deadline, interval))
    return NewJobBatch(interval, tuple(jobs))
