# coding: utf-8

# # Replication factor across partitioners
#
# All five partitioners run through the same pipeline: pick a home per node,
# then complete 1-hop neighborhoods. That makes their replication factors
# directly comparable.

# %%

from streampart import ALGORITHMS, bench, compute_degrees
from streampart.datasets import load_dataset
from streampart.pipeline import format_bench

for name in ("cora", "citeseer"):
    ds = load_dataset(name)
    stream = ds.stream()
    table = bench(stream, ALGORITHMS, (4, 8, 16),
                  degrees=compute_degrees(stream, num_nodes=ds.num_nodes))
    print(f"\n{name}")
    print(format_bench(table))


# # Before completion
#
# Edge partitioners already replicate nodes before any completion. Completion
# adds more copies; the disjoint ownership of cluster merging starts from one
# copy per node.

# %%

from streampart import run_partitioner

ds = load_dataset("cora")
stream = ds.stream()
degrees = compute_degrees(stream, num_nodes=ds.num_nodes)
for algo in ("dbh", "greedy", "hdrf", "2ps"):
    a = run_partitioner(algo, stream, 8, degrees=degrees)
    print(f"{algo:>6}: {a.replication_factor():.3f} replicas per node before completion")
