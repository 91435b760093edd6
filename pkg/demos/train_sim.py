# coding: utf-8

# # Model-averaged training on partitions
#
# Each partition trains a softmax classifier on propagated features of its
# own owners, and the models are averaged with weights proportional to each
# partition's training-node count. We compare against one model trained on
# the whole graph.

# %%

import numpy as np

from streampart import compute_degrees, partition_graph
from streampart.datasets import load_dataset
from streampart.training import TrainConfig, centralized_train, distributed_train, split_roles

ds = load_dataset("cora")
stream = ds.stream()
degrees = compute_degrees(stream, num_nodes=ds.num_nodes)
roles = split_roles(ds.num_nodes, seed=0)
config = TrainConfig(seed=0)

central = centralized_train(ds.edges(), ds.features, ds.labels, roles, config=config)
print(f"centralized test micro-F1: {central.test_f1:.4f}")


# # More partitions, same accuracy
#
# Owners see their full 1-hop neighborhood after completion, so the first
# propagation step is exact for them. Replicas lack their own neighbors, which
# makes the second step approximate.

# %%

for p in (2, 4):
    g = partition_graph("spring", stream, p, degrees=degrees)
    res = distributed_train(g, ds.features, ds.labels, roles, q=2, config=config)
    print(f"p={p}: test micro-F1 {res.test_f1:.4f} after {res.num_syncs} averaging rounds")


# # Averaging less often
#
# Longer intervals mean fewer averaging rounds.

# %%

g = partition_graph("spring", stream, 4, degrees=degrees)
for interval in (1, 5, 10, 20):
    res = distributed_train(g, ds.features, ds.labels, roles, sync_interval=interval, config=config)
    print(f"interval {interval:2d}: {res.num_syncs:3d} rounds, test micro-F1 {res.test_f1:.4f}")


# # Dropping completion
#
# Without completion each cross-partition edge lands in only one endpoint's
# home, so some owners lose neighbors.

# %%

lost = partition_graph("spring", stream, 4, degrees=degrees, completion=False, seed=0)
res = distributed_train(lost, ds.features, ds.labels, roles, config=config)
print(f"no completion: test micro-F1 {res.test_f1:.4f}")
print("owners missing a neighbor:",
      sum(np.count_nonzero(np.bincount(part.edges.ravel(), minlength=ds.num_nodes)[part.owned]
                           < degrees.degree[part.owned]) for part in lost))
