import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import env, make_host, make_state
from hunter_sim.model import (
    DatacenterState,
    Job,
    SchedulingDecision,
    StructuralError,
    Task,
    TaskState,
    migration_cost,
    step_interval,
)
from hunter_sim.scheduler import SchedulerConfig, baseline_random, hunter_schedule
from hunter_sim.workload import NET, JobSpec, NewJobBatch, TaskSpec


def test_idle_interval(two_hosts):
    s = make_state(two_hosts)
    nxt, m = step_interval(s, SchedulingDecision())
    assert nxt.interval == 1 and s.interval == 0
    assert not nxt.tasks and not nxt.wait_queue
    # 2 cores * 5 W idle + storage 1 W + motherboard 1 W, no dynamic heat so no cooling
    assert m.energy == pytest.approx(2 * 12.0 * 300.0)


def test_single_task_lifecycle(two_hosts):
    s = make_state(two_hosts, [(500.0, None, 1)] * 3)
    nxt, m = step_interval(s, SchedulingDecision({0: 0, 1: 0, 2: 1}))
    assert m.completed_tasks == 3
    assert m.leaving_jobs == 1 and m.violated_jobs == 0
    assert nxt.completed_tasks == 3 and nxt.completed_jobs == 1
    assert not nxt.tasks and not nxt.jobs
    assert nxt.job_status(0) == "completed"


def test_scripted_utilization():
    hosts = [make_host(i, cores=2, ips=1000.0) for i in range(3)]
    # host 0: 300 + 500, host 1: 700, host 2: 250 + 250 (IPS, capacity 2000 each)
    s = make_state(hosts, [(300.0, 0), (500.0, 0), (700.0, 1), (250.0, 2), (250.0, 2)])
    _, m = step_interval(s, SchedulingDecision())
    assert m.cpu_util == pytest.approx((0.4, 0.35, 0.25))
    # RAM: 100 MB per task on 4096 MB hosts
    assert m.ram_util == pytest.approx((200 / 4096, 100 / 4096, 200 / 4096))


def test_oversubscription_slows_progress():
    s = make_state([make_host(0, cores=1, ips=1000.0)], [(800.0, 0, 4), (700.0, 0, 4), (0.0, 0, 4)])
    nxt, m = step_interval(s, SchedulingDecision())
    assert m.cpu_util == (1.0,)
    assert nxt.tasks[0].progress == pytest.approx(1000.0 / 1500.0)


def test_unknown_task_or_host_is_structural(two_hosts):
    s = make_state(two_hosts, [(1.0, None)] * 3)
    with pytest.raises(StructuralError):
        step_interval(s, SchedulingDecision({99: 0}))
    with pytest.raises(StructuralError):
        step_interval(s, SchedulingDecision({0: 7}))


def test_migration_cost_examples():
    a, b = make_host(0), make_host(1)
    t = Task(0, 0, np.zeros((1, 8)), 3000.0, 1.0, 0)
    assert migration_cost(t, a, b, 300.0) == pytest.approx(30.0)
    t.container_size = 0.0
    assert migration_cost(t, a, make_host(1, latency=0.08), 300.0) == pytest.approx(0.08)
    t.container_size = 60000.0
    assert migration_cost(t, a, b, 300.0) == 300.0
    with pytest.raises(ValueError):
        migration_cost(t, a, a, 300.0)


def test_migration_moves_task_and_charges_downtime(two_hosts):
    s = make_state(two_hosts, [(100.0, 0, 5)] * 3)
    nxt, m = step_interval(s, SchedulingDecision({0: 1}))
    assert m.migrations == 1 and m.migration_time == pytest.approx(30.0)
    t = nxt.tasks[0]
    assert t.host == 1 and t.state is TaskState.ALLOCATED
    assert t.progress == pytest.approx(1 - 30.0 / 300.0)
    assert nxt.tasks[1].progress == pytest.approx(1.0)


def test_admission_after_execution(two_hosts):
    s = make_state(two_hosts)
    tr = np.ones((2, 8))
    batch = NewJobBatch(1, (JobSpec("x", tuple(TaskSpec(tr, 3000.0) for _ in range(3)), 900.0, 1),))
    nxt, m = step_interval(s, SchedulingDecision(), batch)
    assert m.active_tasks == 0
    assert nxt.wait_queue == [0, 1, 2]
    assert all(t.created_at == 1 for t in nxt.tasks.values())
    assert nxt.job_status(0) == "new"


def test_sla_violation_counted(two_hosts):
    s = make_state(two_hosts, [(100.0, 0, 1)] * 3)
    s.jobs[0] = Job(0, (0, 1, 2), 100.0, 0)  # deadline shorter than one interval
    _, m = step_interval(s, SchedulingDecision())
    assert m.leaving_jobs == 1 and m.violated_jobs == 1 and m.slav == 1.0


def test_job_size_enforced():
    with pytest.raises(ValueError):
        Job(0, (1, 2), 1.0, 0)


def test_temperature_never_below_ambient(two_hosts):
    s = make_state(two_hosts)
    _, m = step_interval(s, SchedulingDecision())
    assert min(m.host_temps) >= s.env.thermal.ambient


# -- properties ---------------------------------------------------------------


class RandomScores:
    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)

    def bind(self, state):
        return lambda cands: self.rng.random(len(cands))


def _random_batch(rng, interval):
    jobs = []
    for _ in range(rng.poisson(1.0)):
        n = int(rng.integers(3, 6))
        length = int(rng.integers(1, 5))
        tasks = []
        for _ in range(n):
            tr = rng.uniform(0, 1, size=(length, 8)) * [1500, 1500, 5, 5, 3000, 5, 5, 20]
            tasks.append(TaskSpec(tr, float(rng.uniform(0, 6000))))
        jobs.append(JobSpec("r", tuple(tasks), 300.0 * (1 + length), interval))
    return NewJobBatch(interval, tuple(jobs))


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(seed=st.integers(0, 2**32 - 1), n_hosts=st.integers(1, 4), use_hunter=st.booleans())
def test_conservation_and_capacity(seed, n_hosts, use_hunter):
    rng = np.random.default_rng(seed)
    hosts = [make_host(i, cores=int(rng.integers(1, 4)), ram=float(rng.uniform(2000, 8000)),
                       disk=float(rng.uniform(4000, 20000))) for i in range(n_hosts)]
    state = DatacenterState(hosts, env())
    state.admit(_random_batch(rng, 0))
    cfg = SchedulerConfig(k=3)
    surrogate = RandomScores(seed)
    for t in range(6):
        if use_hunter:
            decision, _ = hunter_schedule(surrogate, state, cfg)
        else:
            decision = baseline_random(state, rng)
        state, m = step_interval(state, decision, _random_batch(rng, t + 1))
        live = [x for x in state.tasks.values()]
        counted = (state.count(TaskState.WAITING) + state.count(TaskState.ALLOCATED)
                   + state.count(TaskState.MIGRATING) + state.completed_tasks)
        assert state.created_tasks == counted
        assert set(state.wait_queue) == {x.id for x in live if x.state is TaskState.WAITING}
        ram, disk = state.host_reservations()
        for h in state.hosts:
            assert ram[h.id] <= h.ram_capacity * (1 + 1e-9)
            assert disk[h.id] <= h.disk_capacity * (1 + 1e-9)
        assert min(m.host_temps) >= state.env.thermal.ambient
        assert 0.0 <= m.slav <= 1.0 and 0.0 < m.fairness <= 1.0


def test_net_traffic_does_not_affect_cpu(two_hosts):
    s = make_state(two_hosts, [(100.0, 0)] * 3)
    s.tasks[0].trace[:, NET] = 1e6
    _, m = step_interval(s, SchedulingDecision())
    assert m.cpu_util[0] == pytest.approx(300.0 / 2000.0)
