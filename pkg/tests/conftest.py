import numpy as np
import pytest

from crsbm.graph import from_edges
from crsbm.synth import SsbmSpec, generate_ssbm


def pytest_runtest_logreport(report):
    # one visible PASS/FAIL line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[ACCEPTANCE] {name}: {status}", flush=True)


@pytest.fixture
def triangle_graph():
    """3-cycle with 2-d attributes."""
    X = np.array([[0.0, 1.0], [1.0, 0.0], [0.5, 0.5]])
    return from_edges([[0, 1], [1, 2], [0, 2]], X)


@pytest.fixture
def two_cliques():
    """Two disjoint 5-cliques, opposite one-hot attributes."""
    edges = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    edges += [(i + 5, j + 5) for i, j in edges]
    X = np.zeros((10, 2))
    X[:5, 0] = 1.0
    X[5:, 1] = 1.0
    return from_edges(edges, X)


@pytest.fixture
def small_ssbm():
    spec = SsbmSpec(q_star=2, q_tilde=2, n_per=60, c=5.0, epsilon=0.15, seed=3)
    return generate_ssbm(spec)


def random_graph(n, p, seed, d=2):
    """Erdos-Renyi helper for oracle comparisons."""
    rng = np.random.default_rng(seed)
    upper = rng.random((n, n)) < p
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if upper[i, j]]
    X = rng.normal(size=(n, d))
    return from_edges(edges, X)
