import numpy as np
import pytest

from streampart.graph_stream import MemoryEdgeStream


def adjacency(edges, n):
    """Brute-force neighbor sets, the oracle for most closure checks."""
    adj = [set() for _ in range(n)]
    for u, v in np.asarray(edges).reshape(-1, 2).tolist():
        adj[u].add(v)
        adj[v].add(u)
    return adj


def random_graph(rng, n, m, loops=False):
    u = rng.integers(0, n, size=m)
    v = rng.integers(0, n, size=m)
    edges = np.stack([u, v], axis=1)
    if not loops:
        edges = edges[u != v]
    return edges


@pytest.fixture
def triangles():
    return MemoryEdgeStream([(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])


_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record a PASS/FAIL line for an acceptance criterion, then assert it."""

    def check(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        _VERDICTS.append(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
