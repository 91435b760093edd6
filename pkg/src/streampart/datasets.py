"""Bundled citation graphs (Cora, Citeseer, Pubmed) and synthetic generators.

The bundled files live in ``streampart/data/<name>/``:

* ``edges.tsv`` -- each undirected edge once, self-loops removed, in the
  order of the original distribution files;
* ``meta.json`` -- node/edge counts and provenance;
* Cora only: ``features.npz`` (sparse binary bag-of-words) and ``labels.npy``.

:func:`prepare_from_pgl` rebuilds them from the copies shipped inside the
``pgl`` wheel on PyPI (LINQS Cora, Planetoid Citeseer/Pubmed).
"""

from __future__ import annotations

import json
import pickle
import subprocess
import sys
import tempfile
import zipfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .graph_stream import MemoryEdgeStream, open_edge_stream, write_edges

DATASETS = ("cora", "citeseer", "pubmed")
PGL_WHEEL = "pgl==2.2.6"


def data_dir() -> Path:
    return Path(str(resources.files("streampart") / "data"))


@dataclass(eq=False)
class Dataset:
    name: str
    edges_path: Path
    num_nodes: int
    num_edges: int
    features: np.ndarray | None = None
    labels: np.ndarray | None = None

    def stream(self, **kwargs):
        return open_edge_stream(self.edges_path, "text", **kwargs)

    def edges(self) -> np.ndarray:
        return np.loadtxt(self.edges_path, dtype=np.int64, delimiter="\t", ndmin=2)

    @property
    def num_classes(self) -> int | None:
        return None if self.labels is None else int(self.labels.max()) + 1


def load_dataset(name: str, root=None) -> Dataset:
    """Load a bundled dataset; features and labels are present for Cora only."""
    name = name.lower()
    if name not in DATASETS:
        raise ConfigError(f"unknown dataset {name!r}; choose from {', '.join(DATASETS)}")
    base = Path(root) if root is not None else data_dir()
    d = base / name
    meta = json.loads((d / "meta.json").read_text())
    ds = Dataset(name, d / "edges.tsv", meta["num_nodes"], meta["num_edges"])
    if (d / "features.npz").exists():
        ds.features = sp.load_npz(d / "features.npz").toarray().astype(np.float32)
        ds.labels = np.load(d / "labels.npy")
    return ds


def _undirected_once(pairs):
    seen = set()
    out = []
    for u, v in pairs:
        if u == v:
            continue
        key = (u, v) if u < v else (v, u)
        if key not in seen:
            seen.add(key)
            out.append((u, v))
    return np.array(out, dtype=np.int64)


def _prepare_cora(src: Path, dest: Path) -> dict:
    ids, rows, labels = {}, [], []
    with open(src / "cora.content") as fh:
        for line in fh:
            fields = line.split()
            ids[fields[0]] = len(ids)
            rows.append([int(t) for t in fields[1:-1]])
            labels.append(fields[-1])
    classes = sorted(set(labels))
    pairs = []
    with open(src / "cora.cites") as fh:
        for line in fh:
            a, b = line.split()
            pairs.append((ids[a], ids[b]))
    edges = _undirected_once(pairs)
    write_edges(dest / "edges.tsv", edges, "text")
    sp.save_npz(dest / "features.npz", sp.csr_matrix(np.array(rows, dtype=np.float32)))
    np.save(dest / "labels.npy", np.array([classes.index(c) for c in labels], dtype=np.int64))
    return {"num_nodes": len(ids), "num_edges": len(edges), "classes": classes,
            "source": "LINQS cora.content/cora.cites"}


def _prepare_planetoid(src: Path, name: str, dest: Path) -> dict:
    with open(src / f"ind.{name}.graph", "rb") as fh:
        graph = pickle.load(fh, encoding="latin1")
    num_nodes = 1 + max(max(graph), max(max(v) for v in graph.values() if v))
    edges = _undirected_once((u, v) for u, nbrs in graph.items() for v in nbrs)
    write_edges(dest / "edges.tsv", edges, "text")
    return {"num_nodes": int(num_nodes), "num_edges": len(edges),
            "source": f"Planetoid ind.{name}.graph"}


def prepare_from_pgl(dest=None, wheel: str | Path | None = None) -> Path:
    """Extract the three citation graphs from the ``pgl`` wheel into ``dest``.

    Downloads the wheel with pip unless a local ``wheel`` path is given.
    """
    dest = Path(dest) if dest is not None else data_dir()
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        if wheel is None:
            subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q",
                            PGL_WHEEL, "-d", str(tmp)], check=True)
            wheel = next(tmp.glob("pgl-*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            for member in zf.namelist():
                if member.startswith("pgl/data/") and any(n in member for n in DATASETS):
                    zf.extract(member, tmp)
        raw = tmp / "pgl" / "data"
        for name in DATASETS:
            out = dest / name
            out.mkdir(parents=True, exist_ok=True)
            if name == "cora":
                meta = _prepare_cora(raw / "cora", out)
            else:
                meta = _prepare_planetoid(raw / name, name, out)
            (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return dest


def planted_partition_graph(num_nodes: int, num_blocks: int, avg_degree: float,
                            mixing: float = 0.1, seed: int = 0) -> np.ndarray:
    """Undirected multigraph with ``num_blocks`` dense communities.

    Each edge picks a random source; with probability ``1 - mixing`` the
    target is in the same block, otherwise anywhere. Endpoint choice within
    a block is skewed (Zipf-like weights) to give heavy-tailed degrees.
    Self-loops are removed.
    """
    rng = np.random.default_rng(seed)
    m = int(num_nodes * avg_degree / 2)
    block = rng.integers(0, num_blocks, size=num_nodes)
    order = np.argsort(block, kind="stable")
    starts = np.searchsorted(block[order], np.arange(num_blocks + 1))
    weight = 1.0 / np.arange(1, num_nodes + 1) ** 0.6
    rng.shuffle(weight)
    u = rng.choice(num_nodes, size=m, p=weight / weight.sum())
    local = rng.random(m) >= mixing
    v = rng.integers(0, num_nodes, size=m)
    lo, hi = starts[block[u]], starts[block[u] + 1]
    v_local = order[lo + (rng.random(m) * (hi - lo)).astype(np.int64)]
    v = np.where(local, v_local, v)
    edges = np.stack([u, v], axis=1)
    return edges[edges[:, 0] != edges[:, 1]]


def synthetic_stream(num_nodes: int, num_blocks: int, avg_degree: float,
                     mixing: float = 0.1, seed: int = 0) -> MemoryEdgeStream:
    return MemoryEdgeStream(planted_partition_graph(num_nodes, num_blocks, avg_degree,
                                                    mixing, seed))
