"""Experiment orchestration and CSV output."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .config import ExperimentConfig, dump_config
from .metrics import IntervalMetrics, coefficient_of_variation
from .model import DatacenterState, Host, SchedulingDecision, SimEnvironment, step_interval
from .scheduler import (
    QosRecord,
    SchedulerConfig,
    baseline_bestfit,
    baseline_random,
    compute_objective,
    hunter_schedule,
)
from .surrogate import FineTuner, GgcnModel, GgcnSurrogate, LossCurve, Sample, build_graph, load_model, pretrain, save_model
from .surrogate.graph import Normalizer
from .workload import TracePool, WorkloadConfig, generate_arrivals, load_traces, synthetic_pool

log = logging.getLogger(__name__)

BASE_COLUMNS = [
    "replication",
    "interval",
    "scheduler",
    "energy_j",
    "aec",
    "avg_temp_c",
    "max_temp_c",
    "at",
    "slav",
    "objective",
    "leaving_jobs",
    "violated_jobs",
    "completed_tasks",
    "response_time_s",
    "cost",
    "fairness",
    "wait_time_s",
    "migration_time_s",
    "migrations",
    "active_tasks",
    "waiting_tasks",
    "surrogate_evals",
    "mean_cpu_util",
    "mean_ram_util",
]

# per-run value is the mean over intervals of these columns
MEAN_METRICS = [
    "energy_j",
    "aec",
    "avg_temp_c",
    "max_temp_c",
    "at",
    "slav",
    "objective",
    "response_time_s",
    "cost",
    "fairness",
    "wait_time_s",
    "migration_time_s",
    "migrations",
    "mean_cpu_util",
    "mean_ram_util",
]
SUM_METRICS = ["energy_j", "cost", "leaving_jobs", "violated_jobs", "migrations", "completed_tasks"]


@dataclass
class Setup:
    """Everything needed to start an episode, shared across schedulers."""

    hosts: list[Host]
    env: SimEnvironment
    pool: TracePool
    sched: SchedulerConfig

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "Setup":
        hosts = cfg.build_hosts()
        if cfg.workload.trace_dir:
            pool = load_traces(cfg.workload.trace_dir)
        else:
            pool = synthetic_pool(cfg.seed)
        return cls(hosts, cfg.build_environment(hosts), pool, cfg.scheduler_config())

    def initial_state(self) -> DatacenterState:
        return DatacenterState([replace(h) for h in self.hosts], self.env)


@dataclass
class IntervalRecord:
    metrics: IntervalMetrics
    qos: QosRecord
    scheduling_time: float
    fallback: bool = False


@dataclass
class Episode:
    records: list[IntervalRecord] = field(default_factory=list)
    samples: list[Sample] = field(default_factory=list)
    final_state: DatacenterState | None = None


Scheduler = Callable[[DatacenterState], tuple[SchedulingDecision, dict]]


def make_scheduler(name: str, setup: Setup, rng: np.random.Generator | None = None, model: GgcnModel | None = None):
    cap = setup.sched.cpu_cap
    if name == "random":
        rng = rng if rng is not None else np.random.default_rng(0)
        return lambda s: (baseline_random(s, rng, cap), {})
    if name == "bestfit":
        return lambda s: (baseline_bestfit(s, cap), {})
    if name == "hunter":
        if model is None:
            raise ValueError("hunter scheduler needs a surrogate model")
        surrogate = GgcnSurrogate(model, Normalizer.for_hosts(setup.hosts))

        def run(s):
            decision, diag = hunter_schedule(surrogate, s, setup.sched)
            return decision, {"surrogate_evals": diag.surrogate_evals, "fallback": diag.fallback}

        return run
    raise ValueError(f"unknown scheduler {name!r}")


def run_episode(
    setup: Setup,
    scheduler: Scheduler,
    workload: WorkloadConfig,
    n_intervals: int,
    fine_tuner: FineTuner | None = None,
    collect: bool = False,
) -> Episode:
    """Run the control loop for ``n_intervals``.

    With ``collect`` (or a ``fine_tuner``) the [S, D, T] graph of every
    decision is paired with the objective of the interval it produced.
    """
    norm = Normalizer.for_hosts(setup.hosts)
    state = setup.initial_state()
    state.admit(generate_arrivals(workload, 0, setup.pool))
    ep = Episode()
    for t in range(n_intervals):
        start = time.perf_counter()
        decision, info = scheduler(state)
        elapsed = time.perf_counter() - start
        graph = build_graph(state, decision, norm)[0] if (collect or fine_tuner) else None
        state, metrics = step_interval(state, decision, generate_arrivals(workload, t + 1, setup.pool))
        metrics.scheduling_time = elapsed
        metrics.surrogate_evals = int(info.get("surrogate_evals", 0))
        qos = compute_objective(metrics, setup.sched)
        if graph is not None:
            sample = Sample(graph, qos.objective)
            if collect:
                ep.samples.append(sample)
            if fine_tuner is not None:
                fine_tuner(sample)
        ep.records.append(IntervalRecord(metrics, qos, elapsed, bool(info.get("fallback", False))))
    ep.final_state = state
    return ep


def collect_dataset(setup: Setup, n_intervals: int, seed: int, workload: WorkloadConfig) -> list[Sample]:
    """Random-scheduler rollout used to pre-train the surrogate."""
    sched = make_scheduler("random", setup, np.random.default_rng([seed, 0xDA7A]))
    return run_episode(setup, sched, workload, n_intervals, collect=True).samples


def pretrain_surrogate(cfg: ExperimentConfig, setup: Setup) -> tuple[GgcnModel, LossCurve, list[Sample]]:
    workload = cfg.workload_config(pretrain_seed(cfg.seed))
    samples = collect_dataset(setup, cfg.surrogate.pretrain_intervals, cfg.seed, workload)
    model = GgcnModel(cfg.surrogate.hidden, cfg.surrogate.steps, cfg.surrogate.attention, seed=cfg.seed)
    trained, curve = pretrain(model, samples, cfg.train_config())
    return trained, curve, samples


def pretrain_seed(seed: int) -> int:
    # keeps the training workload disjoint from the evaluation workloads
    return seed + 1_000_003


def replication_seed(seed: int, rep: int) -> int:
    return seed * 1000 + rep


def interval_row(rep: int, name: str, rec: IntervalRecord) -> dict:
    m, q = rec.metrics, rec.qos
    row = {
        "replication": rep,
        "interval": m.interval,
        "scheduler": name,
        "energy_j": m.energy,
        "aec": q.aec,
        "avg_temp_c": m.avg_temp,
        "max_temp_c": m.max_temp,
        "at": q.at,
        "slav": q.slav,
        "objective": q.objective,
        "leaving_jobs": m.leaving_jobs,
        "violated_jobs": m.violated_jobs,
        "completed_tasks": m.completed_tasks,
        "response_time_s": m.response_time,
        "cost": m.cost,
        "fairness": m.fairness,
        "wait_time_s": m.wait_time,
        "migration_time_s": m.migration_time,
        "migrations": m.migrations,
        "active_tasks": m.active_tasks,
        "waiting_tasks": m.waiting_tasks,
        "surrogate_evals": m.surrogate_evals,
        "mean_cpu_util": float(np.mean(m.cpu_util)) if m.cpu_util else 0.0,
        "mean_ram_util": float(np.mean(m.ram_util)) if m.ram_util else 0.0,
    }
    for i, (c, r) in enumerate(zip(m.cpu_util, m.ram_util)):
        row[f"cpu_h{i}"] = c
        row[f"ram_h{i}"] = r
    return row


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(path: Path, rows: list[dict], columns: list[str] | None = None) -> None:
    columns = columns or (list(rows[0].keys()) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def read_rows(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_summaries(interval_rows: list[dict]) -> list[dict]:
    """Per-(scheduler, replication) aggregates from per-interval rows."""
    groups: dict[tuple[str, int], list[dict]] = {}
    for r in interval_rows:
        groups.setdefault((str(r["scheduler"]), int(r["replication"])), []).append(r)
    out = []
    for (name, rep), rows in sorted(groups.items()):
        s = {"scheduler": name, "replication": rep, "intervals": len(rows)}
        for m in MEAN_METRICS:
            s[f"mean_{m}"] = float(np.mean([float(r[m]) for r in rows]))
        for m in SUM_METRICS:
            s[f"total_{m}"] = float(np.sum([float(r[m]) for r in rows]))
        leaving = s["total_leaving_jobs"]
        s["overall_slav"] = s["total_violated_jobs"] / leaving if leaving else 0.0
        out.append(s)
    return out


def aggregate(runs: list[dict]) -> list[dict]:
    """Mean, population std and CoV across replications for every run metric."""
    out = []
    by_sched: dict[str, list[dict]] = {}
    for r in runs:
        by_sched.setdefault(str(r["scheduler"]), []).append(r)
    for name in sorted(by_sched):
        rows = by_sched[name]
        keys = [k for k in rows[0] if k not in ("scheduler", "replication", "intervals")]
        for k in keys:
            vals = [float(r[k]) for r in rows]
            try:
                cov = coefficient_of_variation(vals)
            except ZeroDivisionError:
                cov = float("nan")
            out.append({
                "scheduler": name,
                "metric": k,
                "runs": len(vals),
                "mean": float(np.mean(vals)),
                "std": float(np.std(vals)),
                "cov": cov,
            })
    return out


@dataclass
class ExperimentResult:
    out_dir: Path
    interval_rows: list[dict]
    runs: list[dict]
    summary: list[dict]
    timings: list[dict]


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None, model: GgcnModel | None = None,
                   schedulers: list[str] | None = None) -> ExperimentResult:
    """Run ``replications`` episodes per scheduler and write the CSV outputs.

    The surrogate is pre-trained once (or loaded from ``surrogate.weights``)
    and every replication fine-tunes its own copy.
    """
    out = Path(out_dir) if out_dir is not None else cfg.resolve_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    setup = Setup.from_config(cfg)
    schedulers = schedulers or [cfg.scheduler]
    dump_config(cfg, out / "config.yaml")

    if "hunter" in schedulers and model is None:
        if cfg.surrogate.weights:
            model = load_model(cfg.surrogate.weights)
        else:
            model, curve, _ = pretrain_surrogate(cfg, setup)
            curve.to_csv(out / "loss_curve.csv")
            save_model(model, out / "model.hggc")

    rows, timings = [], []
    for name in schedulers:
        for rep in range(cfg.replications):
            rseed = replication_seed(cfg.seed, rep)
            workload = cfg.workload_config(rseed)
            tuner = None
            local = None
            if name == "hunter":
                local = model.copy()
                if setup.sched.fine_tune:
                    tuner = FineTuner(local, setup.sched.learning_rate)
            sched = make_scheduler(name, setup, np.random.default_rng([rseed, 0x5C4E]), local)
            ep = run_episode(setup, sched, workload, cfg.n_intervals, fine_tuner=tuner)
            for rec in ep.records:
                rows.append(interval_row(rep, name, rec))
                timings.append({"scheduler": name, "replication": rep, "interval": rec.metrics.interval,
                                "scheduling_time_s": rec.scheduling_time, "fallback": int(rec.fallback)})
            log.info("%s replication %d: mean objective %.4f", name, rep,
                     float(np.mean([r.qos.objective for r in ep.records])))

    write_rows(out / "intervals.csv", rows)
    write_rows(out / "timings.csv", timings)
    runs = run_summaries(rows)
    write_rows(out / "runs.csv", runs)
    summary = aggregate(runs)
    write_rows(out / "summary.csv", summary)
    return ExperimentResult(out, rows, runs, summary, timings)


def report(in_dir: str | Path) -> ExperimentResult:
    """Recompute run and aggregate summaries from ``intervals.csv``."""
    d = Path(in_dir)
    rows = read_rows(d / "intervals.csv")
    runs = run_summaries(rows)
    summary = aggregate(runs)
    write_rows(d / "runs.csv", runs)
    write_rows(d / "summary.csv", summary)
    timings = read_rows(d / "timings.csv") if (d / "timings.csv").exists() else []
    return ExperimentResult(d, rows, runs, summary, timings)
