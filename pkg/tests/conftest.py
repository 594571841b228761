import numpy as np
import pytest

from hunter_sim.model import DatacenterState, Host, Job, SimEnvironment, Task, TaskState
from hunter_sim.sustainability import CoolingParams, EnergyParams, PowerProfile, SPEC_LOADS, ThermalParams
from hunter_sim.workload import CPU, DISK, RAM

LINEAR = PowerProfile(SPEC_LOADS, tuple(50 + 50 * x for x in SPEC_LOADS))
SIMPLE_ENERGY = EnergyParams(mu1=10.0, mu2=10.0, idle_core_power=5.0, storage_idle=1.0, motherboard=1.0)


def make_host(hid, cores=2, ips=1000.0, ram=4096.0, disk=10000.0, bw=100.0, energy=SIMPLE_ENERGY,
              profile=LINEAR, latency=0.0, price=1.0):
    return Host(hid, f"h{hid}", cores, ips, ram, disk, bw, energy, profile, price_per_hour=price,
                network_latency=latency)


def trace(cpu, length=3, ram=100.0, disk=100.0):
    t = np.zeros((length, 8))
    t[:, CPU] = cpu
    t[:, RAM] = ram
    t[:, DISK] = disk
    return t


def env(interval=300.0, **thermal):
    return SimEnvironment(interval, CoolingParams(heat_max=100.0), ThermalParams(**thermal))


def make_state(hosts, tasks=(), env_=None):
    """``tasks`` entries are (cpu, host or None[, length]); jobs of 3 group them."""
    s = DatacenterState(list(hosts), env_ or env())
    entries = list(tasks)
    while len(entries) % 3:
        entries.append((0.0, None))
    for j in range(len(entries) // 3):
        ids = []
        for cpu, host, *rest in entries[3 * j:3 * j + 3]:
            tid = len(s.tasks)
            t = Task(tid, j, trace(cpu, *rest), 3000.0, 1e6, 0)
            if host is not None:
                t.state, t.host, t.allocated_at = TaskState.ALLOCATED, host, 0
            else:
                s.wait_queue.append(tid)
            s.tasks[tid] = t
            ids.append(tid)
        s.jobs[j] = Job(j, tuple(ids), 1e6, 0)
    s.next_task_id = s.created_tasks = len(s.tasks)
    s.next_job_id = len(s.jobs)
    return s


@pytest.fixture
def two_hosts():
    return [make_host(0), make_host(1)]
