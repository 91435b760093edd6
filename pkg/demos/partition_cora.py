# coding: utf-8

# # Partitioning Cora with streaming cluster merging
#
# Cora ships with the package as a tab-separated edge list. We stream it twice:
# once to count degrees, once to cluster. Nothing here builds an adjacency list.

# %%

import numpy as np

from streampart import compute_degrees, partition_graph, replication_factor
from streampart.datasets import load_dataset
from streampart.metrics import cluster_stats

ds = load_dataset("cora")
stream = ds.stream()
degrees = compute_degrees(stream, num_nodes=ds.num_nodes)
print(ds.num_nodes, "nodes,", degrees.num_edges, "edges, max degree", degrees.degree.max())


# # Clusters before and after merging
#
# The streaming pass leaves many small clusters. Merging folds each small
# cluster into the cluster of its representative's richest neighbor while the
# result stays under the balance bound.

# %%

g = partition_graph("spring", stream, 4, degrees=degrees)
before, after = cluster_stats(g.info["clustered"]), cluster_stats(g.info["merged"])
print("clusters before merging:", before)
print("clusters after merging: ", after)


# # Owned nodes and replicas
#
# Every node has exactly one home. Neighbor completion then copies each
# cross-partition edge into both homes, so owners see all their neighbors.

# %%

for part in g:
    print(f"part {part.index}: {part.owner.sum():5d} owned, "
          f"{(~part.owner).sum():5d} replicas, {part.num_edges:6d} edges")
print("replication factor:", float(replication_factor(g)))


# # A quick closure check
#
# Pick the highest-degree owner in partition 0 and compare its local degree
# with its global one.

# %%

part = g[0]
owned = part.owned
v = owned[np.argmax(degrees.degree[owned])]
local = np.count_nonzero(part.edges == v)
print(f"node {v}: global degree {degrees.degree[v]}, degree inside its home {local}")
