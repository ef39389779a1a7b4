import itertools

import numpy as np
import pytest

from hedseg.pixelgraph import WeightedGraph


def graph_from_pairs(n, pairs, weights=None):
    pairs = list(pairs)
    u = [a for a, _ in pairs]
    v = [b for _, b in pairs]
    w = np.ones(len(pairs)) if weights is None else np.asarray(weights, dtype=float)
    return WeightedGraph.from_edges(n, u, v, w)


@pytest.fixture
def triangle():
    return graph_from_pairs(3, [(0, 1), (0, 2), (1, 2)])


@pytest.fixture
def path3():
    return graph_from_pairs(3, [(0, 1), (1, 2)])


@pytest.fixture
def two_cliques():
    """Two 4-cliques {0..3} and {4..7} joined by the bridge 3-4."""
    pairs = list(itertools.combinations(range(4), 2))
    pairs += [(a + 4, b + 4) for a, b in itertools.combinations(range(4), 2)]
    pairs.append((3, 4))
    return graph_from_pairs(8, pairs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
