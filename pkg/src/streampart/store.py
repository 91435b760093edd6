"""On-disk partition artifacts and node-feature splitting.

Artifact layout::

    manifest.json
    node_ids.bin              (optional: external id per dense node, u64-LE)
    part-<i>/edges.bin        EDG1 + u64 pairs, dense ids, stream order
    part-<i>/edge_ids.bin     u64 stream position per edge
    part-<i>/nodes.tsv        node_id, owner|replica, role
    part-<i>/features.bin     FEA1 feature rows in node-table order

The manifest is written last; a directory without one is incomplete.

Feature files start with a 20-byte header: ``FEA1``, ``|V|`` as u64-LE,
``d`` as u32-LE and the dtype tag ``f4le``; row-major float32 rows follow.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from fractions import Fraction
from pathlib import Path

import numpy as np

from .completion import ROLE_NAMES, Partition, PartitionedGraph
from .errors import ConfigError, CorruptArtifactError, InputDataError
from .graph_stream import EDGE_MAGIC
from .metrics import balance_stats, replication_factor

FEATURE_MAGIC = b"FEA1"
FEATURE_DTYPE_TAG = b"f4le"
FEATURE_HEADER = struct.Struct("<4sQI4s")
ROW_BLOCK = 4096
MANIFEST_SCHEMA = 1


class FeatureMatrix:
    """Read-only, memory-mapped view of a feature file."""

    def __init__(self, path):
        self.path = Path(path)
        with open(self.path, "rb") as fh:
            head = fh.read(FEATURE_HEADER.size)
        if len(head) != FEATURE_HEADER.size:
            raise InputDataError(f"{self.path}: truncated feature header")
        magic, n, d, tag = FEATURE_HEADER.unpack(head)
        if magic != FEATURE_MAGIC or tag != FEATURE_DTYPE_TAG:
            raise InputDataError(f"{self.path}: not a FEA1 float32 feature file")
        expected = FEATURE_HEADER.size + n * d * 4
        actual = self.path.stat().st_size
        if actual != expected:
            raise InputDataError(f"{self.path}: size {actual} != header-implied {expected}")
        self.num_nodes = n
        self.dim = d
        self._mm = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.num_nodes, self.dim

    def _map(self):
        if self._mm is None and self.num_nodes and self.dim:
            self._mm = np.memmap(self.path, dtype="<f4", mode="r",
                                 offset=FEATURE_HEADER.size, shape=self.shape)
        return self._mm

    def rows(self, ids) -> np.ndarray:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.num_nodes):
            raise InputDataError(f"{self.path}: node id out of range 0..{self.num_nodes - 1}")
        if not ids.size or not self.dim:
            return np.zeros((len(ids), self.dim), dtype=np.float32)
        return np.asarray(self._map()[ids], dtype=np.float32)

    def read_all(self) -> np.ndarray:
        return self.rows(np.arange(self.num_nodes))


def write_features(path, features: np.ndarray) -> Path:
    path = Path(path)
    arr = np.ascontiguousarray(features, dtype="<f4")
    if arr.ndim != 2:
        raise ConfigError("features must be a 2-D array")
    with open(path, "wb") as fh:
        fh.write(FEATURE_HEADER.pack(FEATURE_MAGIC, arr.shape[0], arr.shape[1], FEATURE_DTYPE_TAG))
        fh.write(arr.tobytes())
    return path


def _copy_rows(src: FeatureMatrix, ids: np.ndarray, dest: Path) -> Path:
    with open(dest, "wb") as fh:
        fh.write(FEATURE_HEADER.pack(FEATURE_MAGIC, len(ids), src.dim, FEATURE_DTYPE_TAG))
        for start in range(0, len(ids), ROW_BLOCK):
            fh.write(src.rows(ids[start:start + ROW_BLOCK]).astype("<f4").tobytes())
    return dest


def split_features(features, g: PartitionedGraph, out_dir) -> list[Path]:
    """Write one feature file per partition, rows in node-table order.

    Rows are fetched through the memory map a block at a time, so memory
    use does not grow with ``|V| * d``.
    """
    src = features if isinstance(features, FeatureMatrix) else FeatureMatrix(features)
    if src.num_nodes != g.num_nodes:
        raise InputDataError(
            f"feature file has {src.num_nodes} rows but the graph has {g.num_nodes} nodes")
    out_dir = Path(out_dir)
    paths = []
    for part in g:
        d = out_dir / f"part-{part.index}"
        d.mkdir(parents=True, exist_ok=True)
        paths.append(_copy_rows(src, part.nodes, d / "features.bin"))
    return paths


def default_reserved_memory(M: float) -> Fraction:
    """Memory held back for model computation when none is specified: two thirds."""
    return Fraction(2, 3) * Fraction(M)


def partition_capacity(q: int, M: float, T: float | None = None) -> float:
    """Total graph-plus-feature data that ``q`` workers can hold, ``q * (M - T)``."""
    reserved = default_reserved_memory(M) if T is None else Fraction(T)
    return float(q * (Fraction(M) - reserved))


def plan_partition_count(q: int, M: float, T: float | None = None, *,
                         data_size: float) -> int:
    """Number of partitions for ``q`` workers with ``M`` GB each, ``T`` GB reserved.

    ``q`` if the data fits in ``q * (M - T)``; otherwise the smallest multiple
    of ``q`` that brings every partition under ``M - T``.
    """
    if q < 1:
        raise ConfigError("need at least one worker")
    reserved = default_reserved_memory(M) if T is None else Fraction(T)
    if reserved < 0:
        raise ConfigError("reserved memory must be non-negative")
    usable = Fraction(M) - reserved
    if usable <= 0:
        raise ConfigError(f"no usable memory: M={M} <= T={float(reserved):g}")
    data = Fraction(data_size)
    if data <= q * usable:
        return q
    return q * math.ceil(data / (q * usable))


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_edges(path: Path, edges: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(EDGE_MAGIC)
        fh.write(np.ascontiguousarray(edges, dtype="<u8").tobytes())


def _read_edges(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if raw[:4] != EDGE_MAGIC or (len(raw) - 4) % 16:
        raise CorruptArtifactError(f"{path}: malformed edge file")
    return np.frombuffer(raw, dtype="<u8", offset=4).astype(np.int64).reshape(-1, 2)


def _write_nodes(path: Path, part: Partition) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# node_id\tflag\trole\n")
        for node, own, role in zip(part.nodes.tolist(), part.owner.tolist(), part.role.tolist()):
            fh.write(f"{node}\t{'owner' if own else 'replica'}\t{ROLE_NAMES[role]}\n")


def _read_nodes(path: Path):
    nodes, owner, role = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            try:
                node, flag, name = line.rstrip("\n").split("\t")
                nodes.append(int(node))
                owner.append(flag == "owner")
                role.append(ROLE_NAMES.index(name))
            except ValueError:
                raise CorruptArtifactError(f"{path}: bad node record {line!r}") from None
    return (np.array(nodes, dtype=np.int64), np.array(owner, dtype=np.bool_),
            np.array(role, dtype=np.int8))


def write_partitions(g: PartitionedGraph, out_dir, features=None, *,
                     node_ids: np.ndarray | None = None, algorithm: str = "",
                     params: dict | None = None, seed: int | None = None) -> dict:
    """Write ``g`` (and optionally its split features) under ``out_dir``.

    Returns the manifest, which is also saved as ``manifest.json`` after every
    other file is in place.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").unlink(missing_ok=True)
    src = None
    if features is not None:
        src = features if isinstance(features, FeatureMatrix) else FeatureMatrix(features)
        if src.num_nodes != g.num_nodes:
            raise InputDataError("feature row count does not match the graph")
    entries = []
    for part in g:
        rel = Path(f"part-{part.index}")
        d = out_dir / rel
        d.mkdir(exist_ok=True)
        _write_edges(d / "edges.bin", part.edges)
        (d / "edge_ids.bin").write_bytes(np.ascontiguousarray(part.edge_ids, dtype="<u8").tobytes())
        _write_nodes(d / "nodes.tsv", part)
        files = {"edges": str(rel / "edges.bin"), "edge_ids": str(rel / "edge_ids.bin"),
                 "nodes": str(rel / "nodes.tsv")}
        if src is not None:
            _copy_rows(src, part.nodes, d / "features.bin")
            files["features"] = str(rel / "features.bin")
        entries.append({
            "index": part.index,
            "num_nodes": part.num_nodes,
            "num_owned": int(part.owner.sum()),
            "num_edges": part.num_edges,
            "files": files,
            "sha256": {k: _sha256(out_dir / v) for k, v in sorted(files.items())},
        })
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "p": g.p,
        "num_nodes": g.num_nodes,
        "num_edges": g.num_edges,
        "hops": g.hops,
        "feature_dim": None if src is None else src.dim,
        "algorithm": algorithm,
        "params": dict(params or {}),
        "seed": seed,
        "rf": float(replication_factor(g)) if g.num_nodes else None,
        "balance": balance_stats(g),
        "partitions": entries,
    }
    if node_ids is not None:
        (out_dir / "node_ids.bin").write_bytes(np.ascontiguousarray(node_ids, dtype="<u8").tobytes())
        manifest["node_ids"] = "node_ids.bin"
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def read_manifest(path) -> dict:
    path = Path(path)
    mpath = path / "manifest.json" if path.is_dir() else path
    if not mpath.is_file():
        raise CorruptArtifactError(f"{mpath.parent}: no manifest, artifact is incomplete")
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError as exc:
        raise CorruptArtifactError(f"{mpath}: {exc}") from None
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise CorruptArtifactError(f"{mpath}: unsupported schema {manifest.get('schema')!r}")
    return manifest


def read_partitions(path, verify_checksums: bool = True) -> PartitionedGraph:
    """Load an artifact directory, checking every count (and checksum) in the manifest."""
    root = Path(path)
    manifest = read_manifest(root)
    n = manifest["num_nodes"]
    homes = np.full(n, -1, dtype=np.int64)
    parts = []
    for entry in manifest["partitions"]:
        files = entry["files"]
        for key, rel in files.items():
            fp = root / rel
            if not fp.is_file():
                raise CorruptArtifactError(f"missing artifact file {fp}")
            if verify_checksums and _sha256(fp) != entry["sha256"].get(key):
                raise CorruptArtifactError(f"checksum mismatch for {fp}")
        edges = _read_edges(root / files["edges"])
        edge_ids = np.frombuffer((root / files["edge_ids"]).read_bytes(), dtype="<u8").astype(np.int64)
        nodes, owner, role = _read_nodes(root / files["nodes"])
        if len(edges) != entry["num_edges"] or len(edge_ids) != len(edges):
            raise CorruptArtifactError(
                f"partition {entry['index']}: {len(edges)} edges on disk, manifest says {entry['num_edges']}")
        if len(nodes) != entry["num_nodes"] or int(owner.sum()) != entry["num_owned"]:
            raise CorruptArtifactError(f"partition {entry['index']}: node count mismatch")
        if "features" in files:
            fm = FeatureMatrix(root / files["features"])
            if fm.num_nodes != len(nodes):
                raise CorruptArtifactError(f"partition {entry['index']}: feature rows mismatch")
        homes[nodes[owner]] = entry["index"]
        parts.append(Partition(entry["index"], edges, edge_ids, nodes, owner, role))
    if (homes < 0).any():
        raise CorruptArtifactError("some nodes have no owner partition")
    g = PartitionedGraph(parts, homes, n, manifest["num_edges"], manifest["hops"])
    g.info["manifest"] = manifest
    return g


def attach_features(path, features) -> dict:
    """Split ``features`` into an existing artifact and update its manifest."""
    root = Path(path)
    manifest = read_manifest(root)
    g = read_partitions(root, verify_checksums=False)
    src = features if isinstance(features, FeatureMatrix) else FeatureMatrix(features)
    (root / "manifest.json").unlink()
    split_features(src, g, root)
    for entry in manifest["partitions"]:
        rel = f"part-{entry['index']}/features.bin"
        entry["files"]["features"] = rel
        entry["sha256"]["features"] = _sha256(root / rel)
    manifest["feature_dim"] = src.dim
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
