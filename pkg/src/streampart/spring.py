"""Streaming partitioning by richest-neighbor cluster merging.

The pipeline has four stages, each usable on its own:

1. :func:`cluster_stream` -- one pass over the edge stream, volume-bounded
   streaming clustering that also records every node's richest neighbor
   (its highest-degree neighbor seen so far);
2. :func:`select_representatives` -- per cluster, the member whose richest
   neighbor has the highest degree;
3. :func:`merge_clusters` -- smallest-first merging of each cluster into the
   cluster that holds its representative's richest neighbor, as long as the
   merged size stays within ``beta * |V| / p``;
4. :func:`assign_partitions` -- largest-first list scheduling of whole
   clusters onto the least-loaded partition.

All state is a handful of ``O(|V|)`` arrays; no adjacency is ever built.
Cluster index 0 means "unassigned", live clusters use indices ``1..k-1``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .errors import ConfigError
from .graph_stream import DegreeTable, compute_degrees, dense_chunks

DEFAULT_BETA = 1.05


@njit(cache=True)
def _cluster_chunk(edges, degree, tau_vol, cluster, volume, size, richest, k):
    for e in range(edges.shape[0]):
        u = edges[e, 0]
        v = edges[e, 1]
        if u == v:
            continue
        if cluster[u] == 0:
            cluster[u] = k
            volume[k] += degree[u]
            size[k] = 1
            k += 1
        if cluster[v] == 0:
            cluster[v] = k
            volume[k] += degree[v]
            size[k] = 1
            k += 1
        cu = cluster[u]
        cv = cluster[v]
        if cu != cv and volume[cu] <= tau_vol and volume[cv] <= tau_vol:
            if volume[cu] <= volume[cv]:
                volume[cu] -= degree[u]
                size[cu] -= 1
                volume[cv] += degree[u]
                size[cv] += 1
                cluster[u] = cv
            else:
                volume[cu] += degree[v]
                size[cu] += 1
                volume[cv] -= degree[v]
                size[cv] -= 1
                cluster[v] = cu
        ru = richest[u]
        if ru < 0 or degree[ru] < degree[v]:
            richest[u] = v
        rv = richest[v]
        if rv < 0 or degree[rv] < degree[u]:
            richest[v] = u
    return k


@njit(cache=True)
def _representatives(cluster, richest, degree, rep):
    for v in range(cluster.shape[0]):
        i = cluster[v]
        if i == 0 or richest[v] < 0:
            continue
        r = rep[i]
        if r < 0 or degree[richest[r]] < degree[richest[v]]:
            rep[i] = v


@dataclass(eq=False)
class ClusterState:
    """Per-node cluster labels with per-cluster volume and size counters.

    ``parent`` is the alias table left behind by merging: ``parent[i] == i``
    for live roots, otherwise it points (possibly transitively) at the cluster
    that absorbed ``i``. ``cluster`` always holds resolved, live indices.
    """

    degree: np.ndarray
    cluster: np.ndarray
    volume: np.ndarray
    size: np.ndarray
    richest: np.ndarray
    next_index: int
    parent: np.ndarray
    tau_vol: int | None = None

    @classmethod
    def empty(cls, degree: np.ndarray, tau_vol: int | None = None) -> "ClusterState":
        n = len(degree)
        return cls(
            degree=np.asarray(degree, dtype=np.int64),
            cluster=np.zeros(n, dtype=np.int64),
            volume=np.zeros(n + 1, dtype=np.int64),
            size=np.zeros(n + 1, dtype=np.int64),
            richest=np.full(n, -1, dtype=np.int64),
            next_index=1,
            parent=np.arange(n + 1, dtype=np.int64),
            tau_vol=tau_vol,
        )

    @property
    def num_nodes(self) -> int:
        return len(self.cluster)

    def copy(self) -> "ClusterState":
        return replace(self, cluster=self.cluster.copy(), volume=self.volume.copy(),
                       size=self.size.copy(), richest=self.richest.copy(),
                       parent=self.parent.copy())

    def live_clusters(self) -> np.ndarray:
        """Indices of non-empty clusters, ascending."""
        return np.flatnonzero(self.size[: self.next_index] > 0)

    def num_clusters(self) -> int:
        return int(np.count_nonzero(self.size[: self.next_index]))

    def members(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.cluster == i)

    def resolve(self, i: int) -> int:
        """Follow the alias table to the live cluster that now holds ``i``."""
        return _find(self.parent, int(i))

    def seen(self) -> np.ndarray:
        return self.cluster > 0


def _find(parent: np.ndarray, i: int) -> int:
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        parent[i], i = root, parent[i]
    return root


def default_tau_vol(num_edges: int) -> int:
    """Volume cap used when none is given: ``ceil(sqrt(2|E|))``.

    The geometric mean of a single endpoint and the total volume; it keeps
    streaming clusters small enough that merging, not the streaming pass,
    decides the large-scale structure.
    """
    return max(1, math.ceil(math.sqrt(2 * num_edges)))


def cluster_stream(stream, degrees: DegreeTable, tau_vol: int) -> ClusterState:
    """Streaming clustering pass; also tracks each node's richest neighbor.

    For every edge, unseen endpoints open singleton clusters. When both
    endpoint clusters have volume at most ``tau_vol``, the endpoint in the
    lower-volume cluster moves to the other one (on a tie ``u`` moves).
    Self-loops are skipped entirely.
    """
    if tau_vol <= 0:
        raise ConfigError("tau_vol must be positive")
    state = ClusterState.empty(degrees.degree, int(tau_vol))
    k = 1
    for _, edges in dense_chunks(stream, degrees):
        k = _cluster_chunk(edges, state.degree, np.int64(tau_vol), state.cluster,
                           state.volume, state.size, state.richest, k)
    state.next_index = int(k)
    return state


@dataclass(eq=False)
class MergePlan:
    """Representatives per cluster and the merge-size bound.

    ``representative[i]`` is -1 for clusters that have none (and so never
    initiate a merge). ``order`` lists live clusters by ascending size.
    """

    representative: np.ndarray
    order: np.ndarray
    bound: float | None = None


def select_representatives(state: ClusterState) -> MergePlan:
    """Pick, for each live cluster, the member with the richest richest-neighbor.

    Members are scanned in node order and only a strictly richer candidate
    replaces the current one, so the first maximal member wins ties.
    """
    rep = np.full(len(state.size), -1, dtype=np.int64)
    _representatives(state.cluster, state.richest, state.degree, rep)
    live = state.live_clusters()
    order = live[np.argsort(state.size[live], kind="stable")]
    return MergePlan(representative=rep, order=order)


def merge_clusters(state: ClusterState, plan: MergePlan, p: int,
                   beta: float = DEFAULT_BETA) -> ClusterState:
    """Merge small clusters into their representatives' richest-neighbor clusters.

    Clusters leave a min-heap keyed by (current size, index). A popped cluster
    either merges into its target -- which then re-enters the heap at its new
    size -- or is retired for good. A merge happens only if the target is a
    different cluster and the combined size is at most ``beta * |V| / p``.
    The input state is left untouched.
    """
    if p < 1:
        raise ConfigError("p must be at least 1")
    if beta < 1:
        raise ConfigError("beta must be at least 1")
    out = state.copy()
    n = out.num_nodes
    bound = beta * n / p
    plan.bound = bound
    size = out.size
    parent = out.parent
    rep = plan.representative.copy()
    richest = out.richest
    degree = out.degree
    cluster = out.cluster

    heap = [(int(size[i]), int(i)) for i in plan.order]
    heapq.heapify(heap)
    while heap:
        s, i = heapq.heappop(heap)
        if parent[i] != i or size[i] != s:
            continue  # stale entry
        r = rep[i]
        if r < 0:
            continue
        t = _find(parent, int(cluster[richest[r]]))
        if t == i or s + size[t] > bound:
            continue
        parent[i] = t
        size[t] += s
        size[i] = 0
        out.volume[t] += out.volume[i]
        out.volume[i] = 0
        rt = rep[t]
        if rt < 0 or degree[richest[rt]] < degree[richest[r]]:
            rep[t] = r
        heapq.heappush(heap, (int(size[t]), t))

    seen = cluster > 0
    roots = parent[: out.next_index].copy()
    while True:
        hop = parent[roots]
        if np.array_equal(hop, roots):
            break
        roots = hop
    cluster[seen] = roots[cluster[seen]]
    parent[: out.next_index] = roots
    plan.representative = rep
    return out


@dataclass(eq=False)
class PartitionAssignment:
    """Disjoint node ownership: ``part[v]`` is the partition owning dense node ``v``."""

    part: np.ndarray
    p: int
    degrees: DegreeTable | None = None
    info: dict = field(default_factory=dict)

    @property
    def loads(self) -> np.ndarray:
        return np.bincount(self.part, minlength=self.p)

    @property
    def num_nodes(self) -> int:
        return len(self.part)


def assign_partitions(state: ClusterState, p: int, seed: int | None = None) -> PartitionAssignment:
    """Largest cluster first, each onto the partition with the fewest owned nodes.

    Ties go to the lower cluster index and the lower partition index. Nodes
    that never appeared in the stream are placed afterwards one at a time
    (in a seeded random order when ``seed`` is given).
    """
    if p < 1:
        raise ConfigError("p must be at least 1")
    live = state.live_clusters()
    order = live[np.lexsort((live, -state.size[live]))]
    target = np.full(len(state.size), -1, dtype=np.int64)
    heap = [(0, s) for s in range(p)]
    for i in order.tolist():
        load, s = heapq.heappop(heap)
        target[i] = s
        heapq.heappush(heap, (load + int(state.size[i]), s))
    part = np.empty(state.num_nodes, dtype=np.int64)
    seen = state.cluster > 0
    part[seen] = target[state.cluster[seen]]
    loose = np.flatnonzero(~seen)
    if seed is not None:
        loose = np.random.default_rng(seed).permutation(loose)
    for v in loose.tolist():
        load, s = heapq.heappop(heap)
        part[v] = s
        heapq.heappush(heap, (load + 1, s))
    return PartitionAssignment(part=part, p=p)


def spring_partition(stream, p: int, beta: float = DEFAULT_BETA, tau_vol: int | None = None,
                     *, degrees: DegreeTable | None = None, seed: int | None = None,
                     keep_states: bool = False) -> PartitionAssignment:
    """Run clustering, representative selection, merging and assignment end to end.

    ``degrees`` may be passed in to skip the degree pass. With ``keep_states``
    the pre- and post-merge :class:`ClusterState` objects are stored in
    ``assignment.info`` under ``"clustered"`` and ``"merged"``.
    """
    if degrees is None:
        degrees = compute_degrees(stream)
    if tau_vol is None:
        tau_vol = default_tau_vol(degrees.num_edges)
    clustered = cluster_stream(stream, degrees, tau_vol)
    plan = select_representatives(clustered)
    merged = merge_clusters(clustered, plan, p, beta)
    assignment = assign_partitions(merged, p, seed=seed)
    assignment.degrees = degrees
    assignment.info.update(algorithm="spring", p=p, beta=beta, tau_vol=int(tau_vol),
                           clusters_before=clustered.num_clusters(),
                           clusters_after=merged.num_clusters(),
                           max_cluster_size=int(merged.size.max(initial=0)))
    if keep_states:
        assignment.info["clustered"] = clustered
        assignment.info["merged"] = merged
    return assignment
