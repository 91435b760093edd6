"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary) and then
asserts it. Tolerances are the stated ones; nothing here is tuned per run.
"""

import math
import struct
import time
import tracemalloc
from fractions import Fraction

import numpy as np
import pytest

from streampart.datasets import load_dataset
from streampart.graph_stream import MemoryEdgeStream, compute_degrees, dense_chunks, open_edge_stream
from streampart.metrics import replication_factor
from streampart.pipeline import bench, partition_graph
from streampart.spring import spring_partition
from streampart.store import partition_capacity, plan_partition_count, write_partitions
from streampart.training import (ModelParams, TrainConfig, centralized_train, distributed_train,
                                 loss_and_grad, split_roles)

from conftest import adjacency, random_graph

SEEDS = range(10)
BASELINES = ("dbh", "greedy", "hdrf", "2ps")


def _stream(edges, n):
    s = MemoryEdgeStream(np.asarray(edges, dtype=np.int64).reshape(-1, 2), chunk_size=64)
    return s, compute_degrees(s, num_nodes=n)


def _recount_from_files(root, p, n):
    """Count node appearances straight from the partition files."""
    total = 0
    for i in range(p):
        d = root / f"part-{i}"
        raw = (d / "edges.bin").read_bytes()
        assert raw[:4] == b"EDG1"
        ids = struct.unpack(f"<{(len(raw) - 4) // 8}Q", raw[4:])
        present = set(ids)
        for line in (d / "nodes.tsv").read_text().splitlines():
            if line and not line.startswith("#"):
                node, flag, _ = line.split("\t")
                if flag == "owner":
                    present.add(int(node))
        total += len(present)
    return Fraction(total, n)


def test_criterion_01_rf_oracle(tmp_path, verdict):
    rng = np.random.default_rng(2024)
    algos = ("spring", "dbh", "greedy", "hdrf", "2ps")
    start = time.perf_counter()
    mismatches = []
    for t in range(50):
        n = int(rng.integers(2, 201))
        edges = random_graph(rng, n, int(rng.integers(1, 4 * n)))
        s, d = _stream(edges, n)
        p = int(rng.integers(1, 9))
        algo = algos[t % len(algos)]
        g = partition_graph(algo, s, p, degrees=d, hops=1 + t % 2, completion=t % 7 != 0, seed=t)
        out = tmp_path / f"g{t}"
        write_partitions(g, out)
        rf, oracle = replication_factor(g), _recount_from_files(out, p, n)
        if rf != oracle:
            mismatches.append((t, algo, rf, oracle))
    elapsed = time.perf_counter() - start
    verdict(1, not mismatches and elapsed < 10,
            f"50 random graphs, {len(mismatches)} RF mismatches, {elapsed:.1f}s (< 10s)")


def test_criterion_02_rf_direction(verdict):
    start = time.perf_counter()
    cells, within, strict = [], True, 0
    for name in ("cora", "citeseer"):
        ds = load_dataset(name)
        s = ds.stream()
        table = bench(s, ("spring",) + BASELINES, (4, 8, 16),
                      degrees=compute_degrees(s, num_nodes=ds.num_nodes))
        for p in (4, 8, 16):
            ours = table["spring"][p]
            best = min(table[b][p] for b in BASELINES)
            within &= all(ours <= table[b][p] * Fraction(105, 100) for b in BASELINES)
            strict += ours < best
            cells.append(f"{name}/p={p} {float(ours):.3f} vs best {float(best):.3f}")
    elapsed = time.perf_counter() - start
    ok = within and strict >= 0.8 * len(cells) and elapsed < 120
    verdict(2, ok, f"{strict}/{len(cells)} cells strictly better, all within 5%: {within}; "
                   + "; ".join(cells) + f"; {elapsed:.0f}s")


def test_criterion_03_merge_reduction(verdict):
    counts, ok = [], True
    for name in ("cora", "citeseer", "pubmed"):
        ds = load_dataset(name)
        s = ds.stream()
        a = spring_partition(s, 4, degrees=compute_degrees(s, num_nodes=ds.num_nodes))
        before, after = a.info["clusters_before"], a.info["clusters_after"]
        limit = Fraction(1, 10) if name == "pubmed" else Fraction(1, 2)
        ok &= after <= limit * before
        counts.append(f"{name} {before}->{after} (limit {float(limit)}x)")
    verdict(3, ok, "; ".join(counts))


def _test_graphs():
    rng = np.random.default_rng(7)
    for name in ("cora", "citeseer"):
        ds = load_dataset(name)
        yield name, ds.stream(), ds.num_nodes
    for t in range(20):
        n = int(rng.integers(5, 300))
        edges = random_graph(rng, n, int(rng.integers(1, 5 * n)), loops=t % 3 == 0)
        yield f"random{t}", MemoryEdgeStream(edges, chunk_size=32), n


def test_criterion_04_merge_safety_and_balance(verdict):
    bad = []
    checked = 0
    for name, s, n in _test_graphs():
        d = compute_degrees(s, num_nodes=n)
        for p in (2, 4, 8, 16):
            for beta in (1.0, 1.05, 1.5):
                a = spring_partition(s, p, beta, degrees=d, keep_states=True)
                pre, post = a.info["clustered"], a.info["merged"]
                bound = beta * n / p
                for i in post.live_clusters().tolist():
                    if post.size[i] > bound and post.size[i] != pre.size[i]:
                        bad.append(f"{name} p={p} beta={beta} cluster {i} grew past bound")
                largest = int(post.size.max(initial=0))
                loads = a.loads
                if Fraction(int(loads.max())) > Fraction(n, p) + largest:
                    bad.append(f"{name} p={p} beta={beta} load {loads.max()} > {n}/{p}+{largest}")
                checked += 1
    verdict(4, not bad, f"{checked} (graph, p, beta) runs, violations: {bad[:3] or 'none'}")


def test_criterion_05_one_hop_closure(verdict):
    bad, owners = [], 0
    for name, s, n in _test_graphs():
        d = compute_degrees(s, num_nodes=n)
        edges = np.concatenate([e for _, e in dense_chunks(s, d)])
        adj = adjacency(edges, n)
        deg = np.bincount(edges.ravel(), minlength=n)
        for algo in ("spring", "hdrf", "dbh"):
            for p in (4, 16):
                g = partition_graph(algo, s, p, degrees=d)
                for part in g:
                    local = np.bincount(part.edges.ravel(), minlength=n)
                    for v in part.owned.tolist():
                        owners += 1
                        local_nbrs = set(part.edges[part.edges[:, 0] == v, 1].tolist()) | \
                            set(part.edges[part.edges[:, 1] == v, 0].tolist())
                        if local[v] != deg[v] or local_nbrs != adj[v]:
                            bad.append(f"{name} {algo} p={p} node {v}")
    verdict(5, not bad, f"{owners} owned-node checks, violations: {bad[:3] or 'none'}")


def _write_synthetic(path, n, m, chunk=1_000_000, seed=0):
    rng = np.random.default_rng(seed)
    with open(path, "wb") as fh:
        for _ in range(m // chunk):
            u = rng.integers(0, n, chunk, dtype=np.uint64)
            local = rng.random(chunk) < 0.9
            near = (u // 1000) * 1000 + rng.integers(0, 1000, chunk, dtype=np.uint64)
            v = np.where(local, near, rng.integers(0, n, chunk, dtype=np.uint64))
            np.stack([u, v], axis=1).astype("<u8").tofile(fh)


def test_criterion_06_memory_contract(tmp_path, verdict):
    n, m = 500_000, 10_000_000
    path = tmp_path / "big.bin"
    _write_synthetic(path, n, m)
    s = open_edge_stream(path, "binary")
    start = time.perf_counter()
    tracemalloc.start()
    d = compute_degrees(s)
    a = spring_partition(s, 16, degrees=d)
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    elapsed = time.perf_counter() - start
    per_node = peak / d.num_nodes
    adjacency_bytes = 2 * d.num_edges * 8
    c = 256
    ok = d.num_edges == m and per_node <= c and peak < adjacency_bytes and elapsed < 300
    verdict(6, ok, f"|E|={d.num_edges} |V|={d.num_nodes} peak {peak / 2**20:.0f} MiB = "
                   f"{per_node:.0f} B/node (c={c}), adjacency alone {adjacency_bytes / 2**20:.0f} MiB, "
                   f"{a.info['clusters_after']} clusters, {elapsed:.0f}s")


@pytest.fixture(scope="module")
def cora():
    ds = load_dataset("cora")
    s = ds.stream()
    d = compute_degrees(s, num_nodes=ds.num_nodes)
    graphs = {p: partition_graph("spring", s, p, degrees=d) for p in (2, 4)}
    graphs["k2"] = partition_graph("spring", s, 4, degrees=d, hops=2)
    return {"ds": ds, "stream": s, "degrees": d, "graphs": graphs, "runs": {}}


def _run(cora, kind, seed, interval=1):
    """Final test micro-F1 of one training run, memoized across criteria."""
    key = (kind, seed, interval)
    runs = cora["runs"]
    if key not in runs:
        ds = cora["ds"]
        roles = split_roles(ds.num_nodes, seed=seed)
        cfg = TrainConfig(seed=seed)
        if kind == "cen":
            runs[key] = centralized_train(ds.edges(), ds.features, ds.labels, roles, config=cfg)
        else:
            if kind == "nc":
                g = partition_graph("spring", cora["stream"], 4, degrees=cora["degrees"],
                                    completion=False, seed=seed)
            else:
                g = cora["graphs"][kind]
            runs[key] = distributed_train(g, ds.features, ds.labels, roles,
                                          sync_interval=interval, config=cfg)
    return runs[key]


def _mean_f1(cora, kind, interval=1):
    return float(np.mean([_run(cora, kind, s, interval).test_f1 for s in SEEDS]))


def test_criterion_07_distributed_matches_centralized(cora, verdict):
    start = time.perf_counter()
    cen = _mean_f1(cora, "cen")
    p2, p4 = _mean_f1(cora, 2), _mean_f1(cora, 4)
    elapsed = time.perf_counter() - start
    ok = abs(p2 - cen) <= 0.02 and abs(p4 - cen) <= 0.02 and elapsed < 300
    verdict(7, ok, f"centralized {cen:.4f}, p=2 {p2:.4f}, p=4 {p4:.4f} "
                   f"(10 seeds, tol 0.02), {elapsed:.0f}s")


def test_criterion_08_sync_interval(cora, verdict):
    f1_1, f1_10 = _mean_f1(cora, 4, 1), _mean_f1(cora, 4, 10)
    epochs = TrainConfig().epochs
    syncs = {i: _run(cora, 4, 0, i).num_syncs for i in (1, 2, 5, 10, 20, 30)}
    exact = all(k == math.ceil(epochs / i) for i, k in syncs.items())
    ok = abs(f1_10 - f1_1) <= 0.03 and exact
    verdict(8, ok, f"interval 1 {f1_1:.4f}, interval 10 {f1_10:.4f} (tol 0.03); "
                   f"syncs {syncs} == ceil({epochs}/interval): {exact}")


def test_criterion_09_k_hop_ablation(cora, verdict):
    k1, nc, k2 = _mean_f1(cora, 4), _mean_f1(cora, "nc"), _mean_f1(cora, "k2")
    ok = k1 - nc >= 0.01 and k2 - k1 <= 0.01
    verdict(9, ok, f"1-hop {k1:.4f}, no completion {nc:.4f} (gap {k1 - nc:.4f}, need >= 0.01); "
                   f"2-hop {k2:.4f} (gain {k2 - k1:.4f}, need <= 0.01)")


def test_criterion_10_gradient_check(verdict):
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        n, d, c = rng.integers(3, 15), rng.integers(2, 8), rng.integers(2, 6)
        x = rng.normal(size=(n, d))
        y = rng.integers(0, c, size=n)
        params = ModelParams(rng.normal(size=(d, c)), rng.normal(size=c))
        wd = float(rng.choice([0.0, 1e-3, 0.1]))
        _, gw, gb = loss_and_grad(params, x, y, wd)
        h = 1e-6
        for arr, grad in ((params.W, gw), (params.b, gb)):
            num = np.zeros_like(arr)
            for idx in np.ndindex(arr.shape):
                old = arr[idx]
                arr[idx] = old + h
                hi = loss_and_grad(params, x, y, wd)[0]
                arr[idx] = old - h
                lo = loss_and_grad(params, x, y, wd)[0]
                arr[idx] = old
                num[idx] = (hi - lo) / (2 * h)
            rel = np.linalg.norm(grad - num) / max(np.linalg.norm(grad) + np.linalg.norm(num), 1e-12)
            worst = max(worst, rel)
    verdict(10, worst < 1e-4, f"20 instances, worst relative error {worst:.2e} (< 1e-4)")


def test_criterion_11_plan_examples(verdict):
    got = (plan_partition_count(4, 48, 32, data_size=50),
           plan_partition_count(4, 48, 32, data_size=100),
           Fraction(partition_capacity(2, 10)).limit_denominator(1000))
    want = (4, 8, Fraction(20, 3))
    verdict(11, got == want, f"got p=4 -> {got[0]}, p=8 -> {got[1]}, default capacity {got[2]}")
