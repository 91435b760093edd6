"""Edge-list ingestion as replayable streams, plus the exact-degree first pass.

Two on-disk formats are understood:

* text: UTF-8, one ``u<TAB>v`` pair per line, ``#`` comment lines ignored;
* binary: the magic bytes ``EDG1`` followed by little-endian ``u64`` pairs.
  Headerless files (a bare multiple of 16 bytes) are accepted too.

Streams are consumed in fixed-size chunks so that replaying a stream never
holds more than ``chunk_size`` edges at once, whatever the file size.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigError, EdgeFormatError, UnknownNodeError

log = logging.getLogger(__name__)

EDGE_MAGIC = b"EDG1"
DEFAULT_CHUNK = 1 << 18

_TEXT_TAGS = {"tsv", "text", "text-tsv", "txt"}
_BINARY_TAGS = {"bin", "binary", "binary-u64-pairs", "u64"}


def _normalize_format(path: Path, fmt: str) -> str:
    fmt = fmt.lower()
    if fmt == "auto":
        return "binary" if path.suffix in (".bin", ".edg") else "text"
    if fmt in _TEXT_TAGS:
        return "text"
    if fmt in _BINARY_TAGS:
        return "binary"
    raise ConfigError(f"unknown edge format {fmt!r}")


class _Stream:
    """Shared behaviour: edge iteration and replay bookkeeping on top of ``chunks``."""

    add_reverse = False
    _num_edges: int | None = None

    def _raw_chunks(self) -> Iterator[np.ndarray]:
        raise NotImplementedError

    def chunks(self) -> Iterator[np.ndarray]:
        """Yield ``(k, 2)`` uint64 arrays of edges in stream order."""
        total = 0
        for chunk in self._raw_chunks():
            if self.add_reverse and len(chunk):
                both = np.empty((2 * len(chunk), 2), dtype=np.uint64)
                both[0::2] = chunk
                both[1::2] = chunk[:, ::-1]
                chunk = both
            total += len(chunk)
            yield chunk
        self._num_edges = total

    def __iter__(self) -> Iterator[tuple[int, int]]:
        for chunk in self.chunks():
            for u, v in chunk.tolist():
                yield u, v

    @property
    def num_edges(self) -> int | None:
        """Edge count, known once the stream has been replayed fully."""
        return self._num_edges

    def count(self) -> int:
        if self._num_edges is None:
            for _ in self.chunks():
                pass
        return self._num_edges

    def __len__(self) -> int:
        return self.count()


class EdgeStream(_Stream):
    """A replayable, file-backed stream of undirected edges."""

    def __init__(self, path, fmt: str = "auto", *, add_reverse: bool = False,
                 chunk_size: int = DEFAULT_CHUNK):
        self.path = Path(path)
        if not self.path.is_file():
            raise EdgeFormatError(f"cannot read edge file {self.path}")
        if chunk_size < 1:
            raise ConfigError("chunk_size must be positive")
        self.format = _normalize_format(self.path, fmt)
        self.add_reverse = add_reverse
        self.chunk_size = chunk_size
        self.malformed = 0
        self._offset = 0
        if self.format == "binary":
            size = os.path.getsize(self.path)
            with open(self.path, "rb") as fh:
                head = fh.read(4)
            if size % 16 == 4 and head == EDGE_MAGIC:
                self._offset = 4
            elif size % 16 != 0:
                raise EdgeFormatError(
                    f"{self.path}: {size} bytes is not a whole number of u64 pairs")
            self._num_edges = (size - self._offset) // 16 * (2 if add_reverse else 1)

    def __repr__(self):
        return f"EdgeStream({str(self.path)!r}, fmt={self.format!r})"

    def _raw_chunks(self) -> Iterator[np.ndarray]:
        if self.format == "binary":
            yield from self._binary_chunks()
        else:
            yield from self._text_chunks()

    def _binary_chunks(self):
        with open(self.path, "rb") as fh:
            fh.seek(self._offset)
            while True:
                flat = np.fromfile(fh, dtype="<u8", count=2 * self.chunk_size)
                if flat.size == 0:
                    return
                yield flat.reshape(-1, 2).astype(np.uint64, copy=False)

    def _text_chunks(self):
        malformed = 0
        buf: list[int] = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\r\n")
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    malformed += 1
                    continue
                for tok in fields:
                    try:
                        val = int(tok)
                    except ValueError:
                        raise EdgeFormatError(
                            f"{self.path}:{lineno}: {tok!r} is not an unsigned integer") from None
                    if val < 0 or val >= 1 << 64:
                        raise EdgeFormatError(
                            f"{self.path}:{lineno}: {tok!r} is out of the u64 range")
                    buf.append(val)
                if len(buf) >= 2 * self.chunk_size:
                    yield np.array(buf, dtype=np.uint64).reshape(-1, 2)
                    buf = []
        if buf:
            yield np.array(buf, dtype=np.uint64).reshape(-1, 2)
        if malformed and malformed != self.malformed:
            log.warning("%s: skipped %d malformed line(s)", self.path, malformed)
        self.malformed = malformed


class MemoryEdgeStream(_Stream):
    """Stream over an in-memory edge array; same interface as :class:`EdgeStream`.

    Meant for tests and small experiments, where writing a file first is noise.
    """

    def __init__(self, edges, *, add_reverse: bool = False, chunk_size: int = DEFAULT_CHUNK):
        arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if (arr < 0).any():
            raise EdgeFormatError("node ids must be non-negative")
        self.edges = arr.astype(np.uint64)
        self.add_reverse = add_reverse
        self.chunk_size = chunk_size
        self.malformed = 0
        self._num_edges = len(arr) * (2 if add_reverse else 1)

    def _raw_chunks(self):
        for start in range(0, len(self.edges), self.chunk_size):
            yield self.edges[start:start + self.chunk_size]


def open_edge_stream(path, fmt: str = "auto", *, add_reverse: bool = False,
                     chunk_size: int = DEFAULT_CHUNK) -> EdgeStream:
    """Open an edge file as a replayable stream.

    ``fmt`` is ``"text"``/``"tsv"``, ``"binary"``, or ``"auto"`` (binary for
    ``.bin``/``.edg`` suffixes). With ``add_reverse`` each edge is followed by
    its reverse, which turns a directed edge list into an undirected one.
    """
    return EdgeStream(path, fmt, add_reverse=add_reverse, chunk_size=chunk_size)


def write_edges(path, edges: np.ndarray | Iterable[np.ndarray], fmt: str = "auto") -> int:
    """Write edges (an array or an iterable of chunks) in text or binary format."""
    path = Path(path)
    fmt = _normalize_format(path, fmt)
    chunks = [edges] if isinstance(edges, np.ndarray) else edges
    n = 0
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(EDGE_MAGIC)
            for chunk in chunks:
                arr = np.ascontiguousarray(np.asarray(chunk).reshape(-1, 2), dtype="<u8")
                fh.write(arr.tobytes())
                n += len(arr)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            for chunk in chunks:
                arr = np.asarray(chunk).reshape(-1, 2)
                fh.writelines(f"{u}\t{v}\n" for u, v in arr.tolist())
                n += len(arr)
    return n


@dataclass(frozen=True, eq=False)
class DegreeTable:
    """Exact node degrees plus the external-id to dense-index mapping.

    ``ids[i]`` is the external id of dense node ``i``; ids are kept sorted so a
    lookup is a binary search and the table needs no hash map.
    """

    ids: np.ndarray
    degree: np.ndarray
    num_edges: int
    num_self_loops: int = 0

    @property
    def num_nodes(self) -> int:
        return len(self.degree)

    @property
    def contiguous(self) -> bool:
        n = len(self.ids)
        return n == 0 or (int(self.ids[0]) == 0 and int(self.ids[-1]) == n - 1)

    def dense(self, external) -> np.ndarray:
        """Map external ids to dense indices; raises if any id is unknown."""
        ext = np.asarray(external, dtype=np.uint64)
        n = len(self.ids)
        if self.contiguous:
            if ext.size and int(ext.max()) >= n:
                bad = ext[ext >= n].flat[0]
                raise UnknownNodeError(f"node {int(bad)} is not in the degree table")
            return ext.astype(np.int64)
        idx = np.searchsorted(self.ids, ext)
        ok = idx < n
        ok[ok] = self.ids[idx[ok]] == ext[ok]
        if not ok.all():
            bad = ext[~ok].flat[0]
            raise UnknownNodeError(f"node {int(bad)} is not in the degree table")
        return idx.astype(np.int64)

    def __getitem__(self, node) -> int:
        return int(self.degree[self.dense([node])[0]])

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.ids.tolist(), self.degree.tolist()))


def compute_degrees(stream, num_nodes: int | None = None) -> DegreeTable:
    """One pass over ``stream`` counting incident edge endpoints per node.

    Without ``num_nodes`` the node set is whatever appears in the stream and
    dense indices follow ascending external id. With ``num_nodes`` the ids
    are taken to be dense already, so nodes that never appear (isolated ones)
    keep a slot with degree 0. A self-loop adds 2 to its node's degree.
    """
    loops = 0
    if num_nodes is not None:
        degree = np.zeros(num_nodes, dtype=np.int64)
        for chunk in stream.chunks():
            if not len(chunk):
                continue
            hi = int(chunk.max())
            if hi >= num_nodes:
                raise UnknownNodeError(f"node {hi} is outside 0..{num_nodes - 1}")
            degree += np.bincount(chunk.ravel().astype(np.int64), minlength=num_nodes)
            loops += int(np.count_nonzero(chunk[:, 0] == chunk[:, 1]))
        return DegreeTable(np.arange(num_nodes, dtype=np.uint64), degree,
                           stream.num_edges, loops)

    ids = np.empty(0, dtype=np.uint64)
    degree = np.empty(0, dtype=np.int64)
    for chunk in stream.chunks():
        if not len(chunk):
            continue
        loops += int(np.count_nonzero(chunk[:, 0] == chunk[:, 1]))
        uniq, counts = np.unique(chunk.ravel(), return_counts=True)
        pos = np.searchsorted(ids, uniq)
        known = pos < len(ids)
        known[known] = ids[pos[known]] == uniq[known]
        np.add.at(degree, pos[known], counts[known])
        fresh = ~known
        if fresh.any():
            ids = np.insert(ids, pos[fresh], uniq[fresh])
            degree = np.insert(degree, pos[fresh], counts[fresh])
    return DegreeTable(ids, degree, stream.num_edges, loops)


def dense_chunks(stream, degrees: DegreeTable) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(offset, edges)`` with endpoints mapped to dense int64 indices.

    ``offset`` is the stream position of the chunk's first edge.
    """
    offset = 0
    for chunk in stream.chunks():
        yield offset, degrees.dense(chunk).reshape(-1, 2)
        offset += len(chunk)
