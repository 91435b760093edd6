"""Materializing partitions: home selection and neighbor completion.

After a partitioner has run, every node gets one *home* partition where it
is the owner. A second streaming pass then copies each edge into the homes
of both endpoints, so every owned node sees its full neighbor list locally;
the far endpoint of a copied edge becomes a replica in that partition.

``k > 1`` extends the closure hop by hop: pass ``h`` adds every edge touching
a node that first appeared in the partition during pass ``h - 1``. One
extra stream pass per hop, with ``(|V|, p)`` membership bitmaps as state.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselines import ReplicaAssignment
from .errors import ConfigError, UnknownNodeError
from .graph_stream import DegreeTable, compute_degrees, dense_chunks
from .spring import PartitionAssignment

ROLE_NONE, ROLE_TRAIN, ROLE_VAL, ROLE_TEST = 0, 1, 2, 3
ROLE_NAMES = ("none", "train", "val", "test")


@dataclass(eq=False)
class Partition:
    """One partition: its edges (dense ids, stream order) and its node table.

    The node table is sorted by dense id; ``owner`` flags the nodes whose
    home is this partition, ``role`` holds train/val/test codes (owners only).
    """

    index: int
    edges: np.ndarray
    edge_ids: np.ndarray
    nodes: np.ndarray
    owner: np.ndarray
    role: np.ndarray

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def owned(self) -> np.ndarray:
        return self.nodes[self.owner]

    def local_edges(self) -> np.ndarray:
        """Edges relabelled to positions in the node table."""
        return np.searchsorted(self.nodes, self.edges)

    def structurally_equal(self, other: "Partition") -> bool:
        return (self.index == other.index
                and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.edge_ids, other.edge_ids)
                and np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.owner, other.owner)
                and np.array_equal(self.role, other.role))


@dataclass(eq=False)
class PartitionedGraph:
    partitions: list[Partition]
    homes: np.ndarray
    num_nodes: int
    num_edges: int
    hops: int = 1
    info: dict = field(default_factory=dict)

    @property
    def p(self) -> int:
        return len(self.partitions)

    def __iter__(self):
        return iter(self.partitions)

    def __getitem__(self, i) -> Partition:
        return self.partitions[i]

    def attach_roles(self, roles) -> None:
        """Copy global per-node role codes onto owner records; replicas get none."""
        roles = np.asarray(roles, dtype=np.int8)
        for part in self.partitions:
            part.role = np.where(part.owner, roles[part.nodes], ROLE_NONE).astype(np.int8)

    def structurally_equal(self, other: "PartitionedGraph") -> bool:
        return (self.p == other.p and self.num_nodes == other.num_nodes
                and self.num_edges == other.num_edges
                and np.array_equal(self.homes, other.homes)
                and all(a.structurally_equal(b) for a, b in zip(self, other)))


def resolve_homes(assignment: PartitionAssignment | ReplicaAssignment,
                  seed: int | None = 0) -> np.ndarray:
    """One home partition per node.

    Disjoint assignments already are homes. For replica assignments the home
    is drawn uniformly from the node's replica set; nodes without any replica
    go, in index order, to the partition with the fewest homes so far.
    """
    if isinstance(assignment, PartitionAssignment):
        return assignment.part.astype(np.int64, copy=True)
    replicas = assignment.replicas
    n, p = replicas.shape
    keys = np.random.default_rng(seed).random((n, p))
    keys[~replicas] = -1.0
    homes = keys.argmax(axis=1).astype(np.int64)
    orphan = ~replicas.any(axis=1)
    if orphan.any():
        load = np.bincount(homes[~orphan], minlength=p)
        for v in np.flatnonzero(orphan).tolist():
            s = int(load.argmin())
            homes[v] = s
            load[s] += 1
    return homes


def _prepare(stream, homes, degrees):
    if degrees is None:
        degrees = compute_degrees(stream, num_nodes=len(homes))
    homes = np.asarray(homes, dtype=np.int64)
    if len(homes) != degrees.num_nodes:
        raise UnknownNodeError(
            f"home map covers {len(homes)} nodes but the stream has {degrees.num_nodes}")
    return homes, degrees


def _build(edge_sets, homes, p, num_edges, hops):
    """Assemble partitions from per-partition (edge_ids, edges) pieces."""
    parts = []
    for s in range(p):
        ids_list, edge_list = edge_sets[s]
        ids = np.concatenate(ids_list) if ids_list else np.empty(0, dtype=np.int64)
        edges = np.concatenate(edge_list) if edge_list else np.empty((0, 2), dtype=np.int64)
        ids, first = np.unique(ids, return_index=True)
        edges = edges[first].reshape(-1, 2)
        owned = np.flatnonzero(homes == s)
        nodes = np.union1d(owned, edges.ravel()).astype(np.int64)
        owner = homes[nodes] == s
        parts.append(Partition(s, edges, ids, nodes, owner,
                               np.zeros(len(nodes), dtype=np.int8)))
    return PartitionedGraph(parts, homes, len(homes), num_edges, hops)


def complete_edges(stream, homes, k: int = 1, *, degrees: DegreeTable | None = None,
                   p: int | None = None) -> PartitionedGraph:
    """Copy every edge into the home partitions of its endpoints, ``k`` hops deep.

    ``homes`` is indexed by dense node id (see :class:`DegreeTable`). Edges
    reached by several rules are stored once per partition.
    """
    if k < 1:
        raise ConfigError("hop count must be at least 1")
    homes, degrees = _prepare(stream, homes, degrees)
    n = len(homes)
    p = int(homes.max(initial=-1)) + 1 if p is None else p
    present = np.zeros((n, p), dtype=np.bool_)
    present[np.arange(n), homes] = True
    frontier = present.copy()
    edge_sets = [([], []) for _ in range(p)]
    num_edges = 0
    for _ in range(k):
        reached = np.zeros_like(present)
        num_edges = 0
        for offset, edges in dense_chunks(stream, degrees):
            num_edges += len(edges)
            u, v = edges[:, 0], edges[:, 1]
            hit = frontier[u] | frontier[v]
            rows, cols = np.nonzero(hit)
            if not len(rows):
                continue
            order = np.argsort(cols, kind="stable")
            rows, cols = rows[order], cols[order]
            bounds = np.searchsorted(cols, np.arange(p + 1))
            for s in range(p):
                sel = rows[bounds[s]:bounds[s + 1]]
                if len(sel):
                    edge_sets[s][0].append(sel + offset)
                    edge_sets[s][1].append(edges[sel])
            reached[u[rows], cols] = True
            reached[v[rows], cols] = True
        frontier = reached & ~present
        present |= reached
    return _build(edge_sets, homes, p, num_edges, k)


def random_edge_assign(stream, homes, seed: int | None = 0, *,
                       degrees: DegreeTable | None = None,
                       p: int | None = None) -> PartitionedGraph:
    """Ablation without completion: a cross-partition edge goes to one of its
    endpoints' homes, chosen uniformly at random, instead of to both."""
    homes, degrees = _prepare(stream, homes, degrees)
    p = int(homes.max(initial=-1)) + 1 if p is None else p
    rng = np.random.default_rng(seed)
    edge_sets = [([], []) for _ in range(p)]
    num_edges = 0
    for offset, edges in dense_chunks(stream, degrees):
        num_edges += len(edges)
        hu, hv = homes[edges[:, 0]], homes[edges[:, 1]]
        flip = rng.random(len(edges)) < 0.5
        dest = np.where(flip, hv, hu)
        for s in np.unique(dest).tolist():
            sel = np.flatnonzero(dest == s)
            edge_sets[s][0].append(sel + offset)
            edge_sets[s][1].append(edges[sel])
    g = _build(edge_sets, homes, p, num_edges, 0)
    return g
