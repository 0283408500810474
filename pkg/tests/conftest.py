import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from dagsched import ComputeNetwork, TaskGraph

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_instance(rng, max_tasks=6, max_machines=3, ep=None, zero_bw=0.0):
    """Small random DAG plus network drawn from ``rng`` (a numpy Generator)."""
    n = int(rng.integers(1, max_tasks + 1))
    nc = int(rng.integers(1, max_machines + 1))
    p = ep if ep is not None else rng.uniform(0.2, 0.7)
    compute = rng.integers(1, 20, size=n).astype(float)
    edges = [(u, v, float(rng.integers(0, 15))) for u in range(n) for v in range(u + 1, n) if rng.random() < p]
    bw = rng.integers(1, 6, size=(nc, nc)).astype(float)
    bw[rng.random((nc, nc)) < zero_bw] = 0.0
    np.fill_diagonal(bw, 0.0)
    net = ComputeNetwork(rng.integers(1, 5, size=nc).astype(float), bw,
                         rng.integers(2, 30, size=nc).astype(float), rng.integers(2, 30, size=nc).astype(float))
    return TaskGraph(compute, edges), net


@st.composite
def instances(draw, max_tasks=6, max_machines=3, zero_bw=0.0):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_instance(np.random.default_rng(seed), max_tasks, max_machines, zero_bw=zero_bw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
