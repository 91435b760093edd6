"""Partition quality: replication factor, load balance, cluster statistics."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .completion import PartitionedGraph
from .errors import ConfigError
from .spring import ClusterState

REPORT_SCHEMA = 1


def replication_factor(g: PartitionedGraph) -> Fraction:
    """Sum of per-partition node counts (owners and replicas) over ``|V|``."""
    if g.num_nodes == 0:
        raise ConfigError("replication factor is undefined for an empty graph")
    return Fraction(sum(part.num_nodes for part in g), g.num_nodes)


def _max_over_mean(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    mean = values.mean() if len(values) else 0.0
    return float(values.max() / mean) if mean > 0 else 1.0


def balance_stats(g: PartitionedGraph) -> dict:
    owned = [int(part.owner.sum()) for part in g]
    total = [part.num_nodes for part in g]
    edges = [part.num_edges for part in g]
    return {
        "owned_nodes": owned,
        "total_nodes": total,
        "edges": edges,
        "owned_max_over_mean": _max_over_mean(owned),
        "edges_max_over_mean": _max_over_mean(edges),
    }


class ClusterStats(NamedTuple):
    count: int
    mean: float
    std: float


def cluster_stats(state: ClusterState, degrees=None) -> ClusterStats:
    """Count, mean size and population std of clusters, ignoring isolated nodes.

    A cluster counts only through its members of positive degree, so clusters
    made solely of isolated nodes disappear from the statistics.
    """
    degree = state.degree if degrees is None else np.asarray(getattr(degrees, "degree", degrees))
    keep = (state.cluster > 0) & (degree > 0)
    sizes = np.bincount(state.cluster[keep], minlength=1)
    sizes = sizes[sizes > 0]
    if not len(sizes):
        return ClusterStats(0, 0.0, 0.0)
    return ClusterStats(int(len(sizes)), float(sizes.mean()), float(sizes.std()))


@dataclass
class PartitionReport:
    algorithm: str
    p: int
    num_nodes: int
    num_edges: int
    rf_numerator: int
    owned_nodes: list[int]
    total_nodes: list[int]
    edges: list[int]
    owned_max_over_mean: float
    edges_max_over_mean: float
    hops: int = 1
    clusters: dict | None = None
    params: dict = field(default_factory=dict)
    schema: int = REPORT_SCHEMA

    @property
    def rf(self) -> Fraction:
        return Fraction(self.rf_numerator, self.num_nodes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["rf"] = float(self.rf)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PartitionReport":
        d = dict(d)
        d.pop("rf", None)
        if d.get("schema") != REPORT_SCHEMA:
            raise ConfigError(f"unsupported report schema {d.get('schema')!r}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "PartitionReport":
        return cls.from_dict(json.loads(text))

    def to_table(self) -> str:
        lines = [
            f"algorithm  {self.algorithm}",
            f"partitions {self.p}",
            f"nodes      {self.num_nodes}",
            f"edges      {self.num_edges}",
            f"RF         {float(self.rf):.4f}",
            f"owned max/mean {self.owned_max_over_mean:.4f}",
            f"edges max/mean {self.edges_max_over_mean:.4f}",
        ]
        if self.clusters:
            for key, val in sorted(self.clusters.items()):
                lines.append(f"{key:<10} {val}")
        lines.append("")
        lines.append(f"{'part':>4} {'owned':>8} {'nodes':>8} {'edges':>9}")
        for i, (o, t, e) in enumerate(zip(self.owned_nodes, self.total_nodes, self.edges)):
            lines.append(f"{i:>4} {o:>8} {t:>8} {e:>9}")
        return "\n".join(lines)


def partition_report(g: PartitionedGraph, algorithm: str = "", params: dict | None = None,
                     clusters: dict | None = None) -> PartitionReport:
    bal = balance_stats(g)
    return PartitionReport(
        algorithm=algorithm, p=g.p, num_nodes=g.num_nodes, num_edges=g.num_edges,
        rf_numerator=sum(bal["total_nodes"]), hops=g.hops, clusters=clusters,
        params=dict(params or {}), **bal)
