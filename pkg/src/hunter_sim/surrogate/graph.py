"""Heterogeneous task/host graph fed to the surrogate.

Node rows are ordered tasks first (ascending task id), then hosts
(ascending host id). Every feature is scaled by the fleet-wide capacity
maximum of its field so that tasks and hosts share units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..model import DatacenterState, SchedulingDecision, TaskState
from ..sustainability import SPEC_LOADS
from ..workload import CPU, DISK, DISK_READ, DISK_WRITE, NET, RAM, RAM_READ, RAM_WRITE

N_UTIL = 8
SLA_COL = 8
CAP_COLS = slice(9, 13)
TASK_FLAG, HOST_FLAG = 13, 14
NODE_FEATURES = 15
THERMAL_FEATURES = 1 + len(SPEC_LOADS)
# SLA slack is expressed in intervals and saturates at this horizon
SLA_HORIZON = 20.0


@dataclass
class HeteroGraph:
    """One scheduling graph: node features, job edges and an allocation."""

    task_features: np.ndarray  # (n_tasks, NODE_FEATURES)
    host_static: np.ndarray  # (n_hosts, NODE_FEATURES) capacities + flag, utilization zero
    dep_edges: np.ndarray  # (E, 2) task-local index pairs, i < j
    alloc: np.ndarray  # (n_tasks,) host index or -1
    task_ids: tuple[int, ...] = ()
    thermal: np.ndarray | None = None  # (n_hosts, THERMAL_FEATURES)

    @property
    def n_tasks(self) -> int:
        return len(self.task_features)

    @property
    def n_hosts(self) -> int:
        return len(self.host_static)

    @property
    def n_nodes(self) -> int:
        return self.n_tasks + self.n_hosts

    def node_features(self, alloc: np.ndarray | None = None) -> np.ndarray:
        """Full feature matrix; host utilization is the sum of allocated task demand."""
        alloc = self.alloc if alloc is None else alloc
        hosts = self.host_static.copy()
        mask = alloc >= 0
        if mask.any():
            np.add.at(hosts[:, :N_UTIL], alloc[mask], self.task_features[mask, :N_UTIL])
        return np.vstack([self.task_features, hosts])

    def alloc_edges(self, alloc: np.ndarray | None = None) -> np.ndarray:
        alloc = self.alloc if alloc is None else alloc
        idx = np.nonzero(alloc >= 0)[0]
        return np.stack([idx, alloc[idx] + self.n_tasks], axis=1) if idx.size else np.zeros((0, 2), dtype=int)

    def with_alloc(self, alloc: np.ndarray) -> "HeteroGraph":
        return HeteroGraph(self.task_features, self.host_static, self.dep_edges, np.asarray(alloc, dtype=int), self.task_ids, self.thermal)

    def permuted(self, task_perm: np.ndarray, host_perm: np.ndarray) -> "HeteroGraph":
        """Relabel nodes: new task i is old task ``task_perm[i]`` (same for hosts)."""
        inv_t = np.argsort(task_perm)
        inv_h = np.argsort(host_perm)
        dep = inv_t[self.dep_edges] if len(self.dep_edges) else self.dep_edges
        alloc = self.alloc[task_perm]
        alloc = np.where(alloc >= 0, inv_h[np.maximum(alloc, 0)], -1)
        thermal = None if self.thermal is None else self.thermal[host_perm]
        ids = tuple(self.task_ids[i] for i in task_perm) if self.task_ids else ()
        return HeteroGraph(self.task_features[task_perm], self.host_static[host_perm], dep, alloc, ids, thermal)


@dataclass
class GraphBatch:
    """Several graphs packed block-diagonally for one forward pass."""

    x: np.ndarray
    adj: tuple[sp.csr_matrix, sp.csr_matrix]  # dependency, allocation
    host_rows: np.ndarray
    host_counts: np.ndarray
    thermal: np.ndarray
    n_graphs: int = field(default=0)

    @property
    def host_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.host_counts)[:-1]]).astype(int)


def _sym_adj(pairs: np.ndarray, n: int) -> sp.csr_matrix:
    if len(pairs) == 0:
        return sp.csr_matrix((n, n))
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


def pack(graphs: list[HeteroGraph], allocs: list[np.ndarray] | None = None) -> GraphBatch:
    if not graphs:
        raise ValueError("cannot pack an empty list of graphs")
    allocs = allocs or [g.alloc for g in graphs]
    xs, dep, al, host_rows, thermal = [], [], [], [], []
    offset = 0
    for g, a in zip(graphs, allocs):
        if g.thermal is None:
            raise ValueError("graph has no thermal input")
        xs.append(g.node_features(a))
        if len(g.dep_edges):
            dep.append(g.dep_edges + offset)
        ae = g.alloc_edges(a)
        if len(ae):
            al.append(ae + offset)
        host_rows.append(np.arange(g.n_tasks, g.n_nodes) + offset)
        thermal.append(g.thermal)
        offset += g.n_nodes
    empty = np.zeros((0, 2), dtype=int)
    return GraphBatch(
        x=np.vstack(xs),
        adj=(_sym_adj(np.vstack(dep) if dep else empty, offset), _sym_adj(np.vstack(al) if al else empty, offset)),
        host_rows=np.concatenate(host_rows),
        host_counts=np.array([g.n_hosts for g in graphs]),
        thermal=np.vstack(thermal),
        n_graphs=len(graphs),
    )


@dataclass(frozen=True)
class Normalizer:
    cpu: float
    ram: float
    disk: float
    bandwidth: float
    max_power: float

    @classmethod
    def for_hosts(cls, hosts) -> "Normalizer":
        return cls(
            max(h.cpu_capacity for h in hosts),
            max(h.ram_capacity for h in hosts),
            max(h.disk_capacity for h in hosts),
            max(h.bandwidth_capacity for h in hosts),
            max(h.power_profile.max_power for h in hosts),
        )

    def util_scale(self) -> np.ndarray:
        s = np.empty(N_UTIL)
        s[CPU] = self.cpu
        s[RAM] = self.ram
        s[DISK] = self.disk
        s[[RAM_READ, RAM_WRITE, DISK_READ, DISK_WRITE, NET]] = self.bandwidth
        return s


def thermal_input(state: DatacenterState, norm: Normalizer | None = None) -> np.ndarray:
    norm = norm or Normalizer.for_hosts(state.hosts)
    th = state.env.thermal
    rows = []
    for h in state.hosts:
        rows.append(np.concatenate([[th.normalized(h.temperature)], h.power_profile.knot_values() / norm.max_power]))
    return np.array(rows)


def build_graph(
    state: DatacenterState,
    decision: SchedulingDecision | None = None,
    norm: Normalizer | None = None,
) -> tuple[HeteroGraph, np.ndarray]:
    """Graph of all schedulable tasks and every host, with the state's
    allocation overridden by ``decision``."""
    norm = norm or Normalizer.for_hosts(state.hosts)
    scale = norm.util_scale()
    length = state.interval_length
    tasks = sorted(state.schedulable_tasks(), key=lambda t: t.id)
    index = {t.id: i for i, t in enumerate(tasks)}

    feats = np.zeros((len(tasks), NODE_FEATURES))
    alloc = np.full(len(tasks), -1, dtype=int)
    by_job: dict[int, list[int]] = {}
    for i, t in enumerate(tasks):
        feats[i, :N_UTIL] = t.demand() / scale
        job = state.jobs[t.job_id]
        slack = (job.arrival_interval * length + job.sla_deadline) - state.interval * length
        feats[i, SLA_COL] = min(1.0, max(0.0, slack / (SLA_HORIZON * length)))
        feats[i, TASK_FLAG] = 1.0
        if t.state is TaskState.ALLOCATED:
            alloc[i] = t.host
        by_job.setdefault(t.job_id, []).append(i)
    if decision is not None:
        for tid, hid in decision.assignments.items():
            if tid in index:
                alloc[index[tid]] = hid

    pairs = [(a, b) for members in by_job.values() for ai, a in enumerate(members) for b in members[ai + 1:]]
    dep = np.array(sorted(pairs), dtype=int).reshape(-1, 2)

    hosts = np.zeros((len(state.hosts), NODE_FEATURES))
    for h in state.hosts:
        hosts[h.id, CAP_COLS] = (
            h.cpu_capacity / norm.cpu,
            h.ram_capacity / norm.ram,
            h.disk_capacity / norm.disk,
            h.bandwidth_capacity / norm.bandwidth,
        )
        hosts[h.id, HOST_FLAG] = 1.0
    thermal = thermal_input(state, norm)
    graph = HeteroGraph(feats, hosts, dep, alloc, tuple(t.id for t in tasks), thermal)
    return graph, thermal
