from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from streampart.baselines import ReplicaAssignment
from streampart.completion import (ROLE_NONE, ROLE_TEST, ROLE_TRAIN, complete_edges,
                                   random_edge_assign, resolve_homes)
from streampart.errors import ConfigError, UnknownNodeError
from streampart.graph_stream import MemoryEdgeStream, compute_degrees
from streampart.metrics import replication_factor
from streampart.spring import PartitionAssignment

from conftest import adjacency

N = 24
graphs = st.lists(st.tuples(st.integers(0, N - 1), st.integers(0, N - 1)), min_size=1, max_size=60)


def _setup(edges, homes):
    s = MemoryEdgeStream(np.array(edges, dtype=np.int64).reshape(-1, 2), chunk_size=4)
    return s, np.asarray(homes)


def _edge_set(part):
    return {tuple(e) for e in part.edges.tolist()}


def test_path_example():
    s, homes = _setup([(0, 1), (1, 2)], [0, 0, 1])
    g = complete_edges(s, homes)
    assert _edge_set(g[0]) == {(0, 1), (1, 2)}
    assert _edge_set(g[1]) == {(1, 2)}
    assert g[0].nodes.tolist() == [0, 1, 2] and g[0].owner.tolist() == [True, True, False]
    assert g[1].nodes.tolist() == [1, 2] and g[1].owner.tolist() == [False, True]
    # (3 + 2) / 3 straight from the definition
    assert replication_factor(g) == Fraction(5, 3)


def test_single_home_is_identity():
    edges = [(0, 1), (1, 2), (2, 0), (2, 3)]
    s, homes = _setup(edges, [0, 0, 0, 0])
    for g in (complete_edges(s, homes, p=1), random_edge_assign(s, homes, p=1)):
        assert g[0].edges.tolist() == [list(e) for e in edges]
        assert replication_factor(g) == 1


def test_star_two_hop():
    edges = [(0, 1), (0, 2), (0, 3)]
    s, homes = _setup(edges, [0, 1, 1, 1])
    g = complete_edges(s, homes, k=2)
    assert _edge_set(g[1]) == set(edges)
    assert g.hops == 2


def test_two_hop_reaches_further():
    # path 0-1-2-3-4, only node 0 is in partition 0
    edges = [(0, 1), (1, 2), (2, 3), (3, 4)]
    s, homes = _setup(edges, [0, 1, 1, 1, 1])
    assert _edge_set(complete_edges(s, homes, k=1)[0]) == {(0, 1)}
    assert _edge_set(complete_edges(s, homes, k=2)[0]) == {(0, 1), (1, 2)}
    assert _edge_set(complete_edges(s, homes, k=3)[0]) == {(0, 1), (1, 2), (2, 3)}


def test_random_assign_path():
    s, homes = _setup([(0, 1), (1, 2)], [0, 0, 1])
    g = random_edge_assign(s, homes, seed=4)
    assert sum((1, 2) in _edge_set(part) for part in g) == 1
    assert g.hops == 0


def test_bad_inputs():
    s, homes = _setup([(0, 1), (1, 5)], [0, 1])
    with pytest.raises(UnknownNodeError):
        complete_edges(s, homes)
    with pytest.raises(ConfigError):
        complete_edges(s, np.zeros(6, dtype=int), k=0)


def test_resolve_homes_disjoint():
    a = PartitionAssignment(np.array([2, 0, 1]), 3)
    assert resolve_homes(a).tolist() == [2, 0, 1]


def _replicas(rows, p):
    reps = np.zeros((len(rows), p), dtype=bool)
    for v, r in enumerate(rows):
        reps[v, list(r)] = True
    return ReplicaAssignment(np.zeros(0, dtype=np.int64), reps, p)


def test_resolve_homes_seeded_choice():
    a = _replicas([{0, 1}], 3)
    picks = {int(resolve_homes(a, seed=s)[0]) for s in range(20)}
    assert picks == {0, 1}
    assert resolve_homes(a, seed=7).tolist() == resolve_homes(a, seed=7).tolist()


def test_resolve_homes_frequency():
    a = _replicas([{0, 1}] * 1000, 2)
    share = float(np.mean(resolve_homes(a, seed=11) == 0))
    assert 0.45 <= share <= 0.55


def test_resolve_homes_orphans_to_lightest():
    a = _replicas([{0}, {0}, set(), set(), set()], 3)
    assert resolve_homes(a).tolist() == [0, 0, 1, 2, 1]


def test_roles_only_on_owners():
    s, homes = _setup([(0, 1), (1, 2)], [0, 0, 1])
    g = complete_edges(s, homes)
    g.attach_roles(np.array([ROLE_TRAIN, ROLE_TEST, ROLE_TRAIN]))
    assert g[0].role.tolist() == [ROLE_TRAIN, ROLE_TEST, ROLE_NONE]
    assert g[1].role.tolist() == [ROLE_NONE, ROLE_TRAIN]


def _closure_oracle(edges, homes, k, p):
    """Edges incident to any node within k-1 hops of an owned node, by BFS."""
    adj = adjacency(edges, len(homes))
    out = []
    for s in range(p):
        dist = {v: 0 for v in range(len(homes)) if homes[v] == s}
        frontier = list(dist)
        for h in range(1, k):
            nxt = []
            for v in frontier:
                for u in adj[v]:
                    if u not in dist:
                        dist[u] = h
                        nxt.append(u)
            frontier = nxt
        out.append({(u, v) for u, v in edges if u in dist or v in dist})
    return out


@settings(max_examples=100, deadline=None)
@given(graphs, st.integers(1, 4), st.integers(1, 3), st.randoms(use_true_random=False))
def test_closure_matches_bfs(edges, p, k, rnd):
    homes = [rnd.randrange(p) for _ in range(N)]
    s, homes = _setup(edges, homes)
    d = compute_degrees(s, num_nodes=N)
    g = complete_edges(s, homes, k, degrees=d, p=p)
    want = _closure_oracle(edges, homes, k, p)
    for part, edge_set in zip(g, want):
        assert _edge_set(part) == edge_set
        assert len(part.edge_ids) == len(set(part.edge_ids.tolist()))  # no duplicates
        assert part.owned.tolist() == np.flatnonzero(homes == part.index).tolist()


@settings(max_examples=100, deadline=None)
@given(graphs, st.integers(1, 4), st.randoms(use_true_random=False))
def test_one_hop_closure_degrees(edges, p, rnd):
    homes = np.array([rnd.randrange(p) for _ in range(N)])
    s, _ = _setup(edges, homes)
    d = compute_degrees(s, num_nodes=N)
    g = complete_edges(s, homes, degrees=d, p=p)
    for part in g:
        local = np.bincount(part.edges.ravel(), minlength=N)
        for v in part.owned.tolist():
            assert local[v] == d.degree[v]


@settings(max_examples=100, deadline=None)
@given(graphs, st.integers(1, 4), st.randoms(use_true_random=False), st.integers(0, 5))
def test_rf_monotone_in_hops(edges, p, rnd, seed):
    homes = np.array([rnd.randrange(p) for _ in range(N)])
    s, _ = _setup(edges, homes)
    d = compute_degrees(s, num_nodes=N)
    nc = random_edge_assign(s, homes, seed, degrees=d, p=p)
    rfs = [replication_factor(complete_edges(s, homes, k, degrees=d, p=p)) for k in (1, 2, 3)]
    assert replication_factor(nc) <= rfs[0] <= rfs[1] <= rfs[2]
    # every edge lands exactly once without completion
    ids = np.concatenate([part.edge_ids for part in nc])
    assert sorted(ids.tolist()) == list(range(len(edges)))
