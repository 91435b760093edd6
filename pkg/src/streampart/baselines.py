"""Edge (vertex-cut) streaming partitioners used as comparison points.

Each partitioner assigns every streamed edge to exactly one partition; a
node is then replicated in every partition holding one of its edges.

* :func:`dbh_partition` -- degree-based hashing: hash the lower-degree endpoint.
* :func:`greedy_partition` -- PowerGraph's greedy placement rules.
* :func:`hdrf_partition` -- High-Degree Replicated First scoring (Petroni et al.).
* :func:`two_phase_partition` -- a 2PS-style variant: streaming clustering,
  volume-balanced cluster placement, then endpoint-cluster preference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numba import njit

from .errors import ConfigError
from .graph_stream import DegreeTable, compute_degrees, dense_chunks
from .spring import cluster_stream, default_tau_vol

HDRF_EPSILON = 1.0


@dataclass(eq=False)
class ReplicaAssignment:
    """Per-edge partition indices and the replica sets they induce.

    ``edge_part[e]`` is the partition of the ``e``-th streamed edge and
    ``replicas[v, s]`` is true when node ``v`` has an edge in partition ``s``.
    """

    edge_part: np.ndarray
    replicas: np.ndarray
    p: int
    degrees: DegreeTable | None = None
    info: dict = field(default_factory=dict)

    @property
    def edge_counts(self) -> np.ndarray:
        return np.bincount(self.edge_part, minlength=self.p)

    @property
    def num_nodes(self) -> int:
        return self.replicas.shape[0]

    def replica_set(self, v: int) -> list[int]:
        return np.flatnonzero(self.replicas[v]).tolist()

    def replication_factor(self) -> float:
        """Replicas per node before neighbor completion (isolated nodes count once)."""
        counts = self.replicas.sum(axis=1)
        return float(np.maximum(counts, 1).sum() / len(counts))


def mix64(x) -> np.ndarray:
    """SplitMix64 finalizer, vectorized over uint64 arrays."""
    z = np.asarray(x, dtype=np.uint64).copy()
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= np.uint64(0xBF58476D1CE4E5B9)
        z ^= z >> np.uint64(27)
        z *= np.uint64(0x94D049BB133111EB)
        z ^= z >> np.uint64(31)
    return z


def identity_hash(x) -> np.ndarray:
    return np.asarray(x, dtype=np.uint64)


HASHES: dict[str, Callable] = {"mix64": mix64, "identity": identity_hash}


def _collect(stream, degrees, p, place_chunk):
    """Drive a per-chunk placement callback and record replica sets."""
    replicas = np.zeros((degrees.num_nodes, p), dtype=np.bool_)
    parts = []
    for _, edges in dense_chunks(stream, degrees):
        ep = place_chunk(edges)
        replicas[edges[:, 0], ep] = True
        replicas[edges[:, 1], ep] = True
        parts.append(ep)
    edge_part = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    return edge_part.astype(np.int64), replicas


def _check_p(p):
    if p < 1:
        raise ConfigError("p must be at least 1")


def dbh_partition(stream, degrees: DegreeTable | None, p: int,
                  hash_fn: Callable | str = "mix64") -> ReplicaAssignment:
    """Assign each edge to ``hash(lower-degree endpoint) mod p``.

    Degree ties pick the lower node id. Hashes apply to external node ids,
    so the placement does not depend on how ids were densified.
    """
    _check_p(p)
    if degrees is None:
        degrees = compute_degrees(stream)
    h = HASHES[hash_fn] if isinstance(hash_fn, str) else hash_fn
    deg = degrees.degree
    ids = degrees.ids

    def place(edges):
        u, v = edges[:, 0], edges[:, 1]
        du, dv = deg[u], deg[v]
        pick = np.where((du < dv) | ((du == dv) & (u <= v)), u, v)
        return (h(ids[pick]) % np.uint64(p)).astype(np.int64)

    edge_part, replicas = _collect(stream, degrees, p, place)
    return ReplicaAssignment(edge_part, replicas, p, degrees, {"algorithm": "dbh"})


@njit(cache=True)
def _greedy_chunk(edges, replicas, load, p, slack, out):
    for e in range(edges.shape[0]):
        u = edges[e, 0]
        v = edges[e, 1]
        total = 0
        for s in range(p):
            total += load[s]
        cap = (1.0 + slack) * total / p + 1.0
        best = -1
        # 0: both endpoints present, 1: either endpoint present, 2: anywhere
        for case in range(3):
            for s in range(p):
                au = replicas[u, s]
                av = replicas[v, s]
                if case == 0:
                    ok = au and av
                elif case == 1:
                    ok = au or av
                else:
                    ok = True
                if ok and (case == 2 or load[s] < cap):
                    if best < 0 or load[s] < load[best]:
                        best = s
            if best >= 0:
                break
        out[e] = best
        load[best] += 1
        replicas[u, best] = True
        replicas[v, best] = True


def greedy_partition(stream, p: int, balance_slack: float = 0.1,
                     degrees: DegreeTable | None = None) -> ReplicaAssignment:
    """PowerGraph greedy edge placement.

    In order of preference: a partition already holding both endpoints, one
    holding either endpoint, then any partition; the least-loaded (by edge
    count, lowest index on ties) partition of the first non-empty class wins.
    A candidate whose load reaches ``(1 + balance_slack) * mean + 1`` is
    skipped in the first two classes.
    """
    _check_p(p)
    if balance_slack < 0:
        raise ConfigError("balance_slack must be non-negative")
    if degrees is None:
        degrees = compute_degrees(stream)
    replicas = np.zeros((degrees.num_nodes, p), dtype=np.bool_)
    load = np.zeros(p, dtype=np.int64)
    parts = []
    for _, edges in dense_chunks(stream, degrees):
        out = np.empty(len(edges), dtype=np.int64)
        _greedy_chunk(edges, replicas, load, p, float(balance_slack), out)
        parts.append(out)
    edge_part = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    return ReplicaAssignment(edge_part, replicas, p, degrees,
                             {"algorithm": "greedy", "balance_slack": balance_slack})


@njit(cache=True)
def _hdrf_chunk(edges, replicas, load, partial, exact, use_exact, lam, eps, out):
    p = load.shape[0]
    for e in range(edges.shape[0]):
        u = edges[e, 0]
        v = edges[e, 1]
        partial[u] += 1
        partial[v] += 1
        if use_exact:
            du = exact[u]
            dv = exact[v]
        else:
            du = partial[u]
            dv = partial[v]
        theta_u = du / (du + dv)
        theta_v = 1.0 - theta_u
        maxl = load[0]
        minl = load[0]
        for s in range(1, p):
            if load[s] > maxl:
                maxl = load[s]
            if load[s] < minl:
                minl = load[s]
        best = 0
        best_score = -1.0
        for s in range(p):
            score = 0.0
            if replicas[u, s]:
                score += 1.0 + (1.0 - theta_u)
            if replicas[v, s]:
                score += 1.0 + (1.0 - theta_v)
            score += lam * (maxl - load[s]) / (eps + maxl - minl)
            if score > best_score:
                best_score = score
                best = s
        out[e] = best
        load[best] += 1
        replicas[u, best] = True
        replicas[v, best] = True


def hdrf_partition(stream, degrees: DegreeTable | None, p: int, lam: float = 1.1,
                   *, exact_degrees: bool = False) -> ReplicaAssignment:
    """HDRF: place each edge where ``C_rep + lam * C_bal`` is largest.

    ``C_rep`` rewards partitions that already hold an endpoint, weighting the
    lower-degree endpoint more (``g = 1 + (1 - theta)`` with ``theta`` the
    endpoint's share of the pair's degree), so high-degree nodes are the ones
    that get replicated. ``C_bal = (maxload - load) / (1 + maxload - minload)``.
    Degrees are the partial, streamed-so-far ones as in the original method
    unless ``exact_degrees`` is set. Ties go to the lowest index.
    """
    _check_p(p)
    if lam < 0:
        raise ConfigError("lambda must be non-negative")
    if degrees is None:
        degrees = compute_degrees(stream)
    replicas = np.zeros((degrees.num_nodes, p), dtype=np.bool_)
    load = np.zeros(p, dtype=np.int64)
    partial = np.zeros(degrees.num_nodes, dtype=np.int64)
    parts = []
    for _, edges in dense_chunks(stream, degrees):
        out = np.empty(len(edges), dtype=np.int64)
        _hdrf_chunk(edges, replicas, load, partial, degrees.degree, exact_degrees,
                    float(lam), HDRF_EPSILON, out)
        parts.append(out)
    edge_part = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    return ReplicaAssignment(edge_part, replicas, p, degrees,
                             {"algorithm": "hdrf", "lambda": lam})


def two_phase_partition(stream, degrees: DegreeTable | None, p: int,
                        tau_vol: int | None = None) -> ReplicaAssignment:
    """2PS-style partitioning.

    Phase one reuses the streaming clustering pass (without merging) and
    places clusters, by descending volume, on the partition with the least
    accumulated volume. Phase two re-streams the edges: an edge whose
    endpoints' clusters share a partition goes there, otherwise it follows
    the endpoint whose cluster has the larger volume (``u`` on ties).
    """
    _check_p(p)
    if degrees is None:
        degrees = compute_degrees(stream)
    if tau_vol is None:
        tau_vol = default_tau_vol(degrees.num_edges)
    state = cluster_stream(stream, degrees, tau_vol)
    live = state.live_clusters()
    order = live[np.lexsort((live, -state.volume[live]))]
    cpart = np.zeros(len(state.size), dtype=np.int64)
    vol_load = np.zeros(p, dtype=np.int64)
    for i in order.tolist():
        s = int(np.argmin(vol_load))
        cpart[i] = s
        vol_load[s] += state.volume[i]
    cluster = state.cluster
    volume = state.volume

    def place(edges):
        u, v = edges[:, 0], edges[:, 1]
        cu, cv = cluster[u], cluster[v]
        pu, pv = cpart[cu], cpart[cv]
        # nodes that only have self-loops are never clustered
        pu = np.where(cu == 0, np.where(cv == 0, u % p, pv), pu)
        pv = np.where(cv == 0, pu, pv)
        follow_u = volume[cu] >= volume[cv]
        return np.where(pu == pv, pu, np.where(follow_u, pu, pv)).astype(np.int64)

    edge_part, replicas = _collect(stream, degrees, p, place)
    return ReplicaAssignment(edge_part, replicas, p, degrees,
                             {"algorithm": "2ps", "tau_vol": int(tau_vol),
                              "label": "2PS-style"})
