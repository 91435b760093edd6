"""Streaming graph partitioning with neighbor completion for distributed GNN training."""

from .baselines import ReplicaAssignment, dbh_partition, greedy_partition, hdrf_partition, two_phase_partition
from .completion import Partition, PartitionedGraph, complete_edges, random_edge_assign, resolve_homes
from .errors import (ConfigError, CorruptArtifactError, EdgeFormatError, InputDataError,
                     InvariantError, StreamPartError, UnknownNodeError)
from .graph_stream import DegreeTable, EdgeStream, MemoryEdgeStream, compute_degrees, open_edge_stream, write_edges
from .metrics import PartitionReport, balance_stats, cluster_stats, partition_report, replication_factor
from .pipeline import ALGORITHMS, bench, partition_graph, run_partitioner
from .spring import (ClusterState, PartitionAssignment, assign_partitions, cluster_stream, merge_clusters,
                     select_representatives, spring_partition)
from .store import FeatureMatrix, plan_partition_count, read_partitions, split_features, write_partitions

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS", "ClusterState", "ConfigError", "CorruptArtifactError", "DegreeTable",
    "EdgeFormatError", "EdgeStream", "FeatureMatrix", "InputDataError", "InvariantError",
    "MemoryEdgeStream", "Partition", "PartitionAssignment", "PartitionReport", "PartitionedGraph",
    "ReplicaAssignment", "StreamPartError", "UnknownNodeError", "assign_partitions", "balance_stats",
    "bench", "cluster_stats", "cluster_stream", "complete_edges", "compute_degrees", "dbh_partition",
    "greedy_partition", "hdrf_partition", "merge_clusters", "open_edge_stream", "partition_graph",
    "partition_report", "plan_partition_count", "random_edge_assign", "read_partitions",
    "replication_factor", "resolve_homes", "run_partitioner", "select_representatives",
    "split_features", "spring_partition", "two_phase_partition", "write_edges", "write_partitions",
]
