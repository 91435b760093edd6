"""Run any partitioner by name through home selection and completion."""

from __future__ import annotations

from fractions import Fraction

from .baselines import dbh_partition, greedy_partition, hdrf_partition, two_phase_partition
from .completion import PartitionedGraph, complete_edges, random_edge_assign, resolve_homes
from .errors import ConfigError
from .graph_stream import DegreeTable, compute_degrees
from .metrics import cluster_stats, partition_report, replication_factor
from .spring import DEFAULT_BETA, spring_partition

ALGORITHMS = ("spring", "dbh", "greedy", "hdrf", "2ps")


def run_partitioner(algo: str, stream, p: int, *, degrees: DegreeTable | None = None,
                    beta: float = DEFAULT_BETA, tau_vol: int | None = None,
                    lam: float = 1.1, seed: int | None = 0, keep_states: bool = False):
    """Return the raw assignment (disjoint or replica-based) of algorithm ``algo``."""
    if degrees is None:
        degrees = compute_degrees(stream)
    if algo == "spring":
        return spring_partition(stream, p, beta, tau_vol, degrees=degrees,
                                keep_states=keep_states)
    if algo == "dbh":
        return dbh_partition(stream, degrees, p)
    if algo == "greedy":
        return greedy_partition(stream, p, degrees=degrees)
    if algo == "hdrf":
        return hdrf_partition(stream, degrees, p, lam)
    if algo == "2ps":
        return two_phase_partition(stream, degrees, p, tau_vol)
    raise ConfigError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGORITHMS)}")


def partition_graph(algo: str, stream, p: int, *, degrees: DegreeTable | None = None,
                    hops: int = 1, completion: bool = True, seed: int | None = 0,
                    **kwargs) -> PartitionedGraph:
    """Partition, choose homes and materialize partitions in one call.

    ``completion=False`` gives the ablation where cross-partition edges land
    in one randomly chosen endpoint home.
    """
    if degrees is None:
        degrees = compute_degrees(stream)
    kwargs.setdefault("keep_states", algo == "spring")
    assignment = run_partitioner(algo, stream, p, degrees=degrees, seed=seed, **kwargs)
    homes = resolve_homes(assignment, seed=seed)
    if completion:
        g = complete_edges(stream, homes, hops, degrees=degrees, p=p)
    else:
        g = random_edge_assign(stream, homes, seed, degrees=degrees, p=p)
    g.info.update(assignment.info)
    g.info["algorithm"] = algo
    g.info["assignment"] = assignment
    return g


def report_for(g: PartitionedGraph, params: dict | None = None):
    """Metrics report; cluster statistics appear when clustering states were kept."""
    clusters = None
    merged = g.info.get("merged")
    clustered = g.info.get("clustered")
    if clustered is not None and merged is not None:
        before, after = cluster_stats(clustered), cluster_stats(merged)
        clusters = {"clusters_before": before._asdict(), "clusters_after": after._asdict()}
    return partition_report(g, g.info.get("algorithm", ""), params, clusters)


def bench(stream, algos=ALGORITHMS, ps=(4, 8, 16), *, seed: int | None = 0,
          degrees: DegreeTable | None = None) -> dict[str, dict[int, Fraction]]:
    """Post-completion replication factor for every (algorithm, p) pair."""
    if degrees is None:
        degrees = compute_degrees(stream)
    table: dict[str, dict[int, Fraction]] = {}
    for algo in algos:
        table[algo] = {}
        for p in ps:
            g = partition_graph(algo, stream, p, degrees=degrees, seed=seed)
            table[algo][p] = replication_factor(g)
    return table


def format_bench(table: dict[str, dict[int, Fraction]]) -> str:
    ps = sorted({p for row in table.values() for p in row})
    head = f"{'algorithm':<10}" + "".join(f"{'p=' + str(p):>10}" for p in ps)
    lines = [head]
    for algo, row in table.items():
        lines.append(f"{algo:<10}" + "".join(f"{float(row[p]):>10.4f}" for p in ps))
    return "\n".join(lines)
