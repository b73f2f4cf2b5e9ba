"""Coauthor network and publication corpus: loading, validation, indexing.

Node ids are opaque strings. At load time they are sorted lexicographically and
mapped to a dense ``0..N-1`` index; every array in this package is indexed that
way, and ids only reappear at I/O boundaries.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Malformed edge list or publication file."""


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable undirected simple graph in CSR form.

    ``indptr``/``indices`` hold the sorted neighbour lists; ``degree`` is
    ``diff(indptr)``. Construct through :meth:`from_edges` or the loaders.
    """

    ids: tuple[str, ...]
    indptr: np.ndarray
    indices: np.ndarray
    degree: np.ndarray
    self_loops_dropped: int = 0
    _pos: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[str, str]],
        isolated: Iterable[str] = (),
    ) -> "Network":
        pairs = set()
        names = set(isolated)
        loops = 0
        for a, b in edges:
            a, b = str(a), str(b)
            names.add(a)
            names.add(b)
            if a == b:
                loops += 1
                continue
            pairs.add((a, b) if a < b else (b, a))
        if not names:
            raise GraphFormatError("empty graph: no nodes")
        ids = tuple(sorted(names))
        pos = {name: i for i, name in enumerate(ids)}
        n = len(ids)
        if pairs:
            e = np.array([(pos[a], pos[b]) for a, b in pairs], dtype=np.int64)
            src = np.concatenate([e[:, 0], e[:, 1]])
            dst = np.concatenate([e[:, 1], e[:, 0]])
        else:
            src = dst = np.empty(0, dtype=np.int64)
        return cls._from_directed(ids, pos, src, dst, n, loops)

    @classmethod
    def from_index_edges(cls, ids: Sequence[str], src: np.ndarray, dst: np.ndarray) -> "Network":
        """Build from dense-index edge arrays (each undirected edge listed once).

        ``ids`` must already be in lexicographic order.
        """
        ids = tuple(ids)
        if list(ids) != sorted(ids) or len(set(ids)) != len(ids):
            raise GraphFormatError("ids must be unique and lexicographically sorted")
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        keep = src != dst
        lo = np.minimum(src[keep], dst[keep])
        hi = np.maximum(src[keep], dst[keep])
        pairs = np.unique(np.stack([lo, hi], axis=1), axis=0) if lo.size else np.empty((0, 2), np.int64)
        pos = {name: i for i, name in enumerate(ids)}
        s = np.concatenate([pairs[:, 0], pairs[:, 1]])
        d = np.concatenate([pairs[:, 1], pairs[:, 0]])
        return cls._from_directed(ids, pos, s, d, len(ids), int((~keep).sum()))

    @classmethod
    def _from_directed(cls, ids, pos, src, dst, n, loops):
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        counts = np.bincount(src, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = dst.astype(np.int64)
        degree = counts.astype(np.int64)
        for arr in (indptr, indices, degree):
            arr.setflags(write=False)
        return cls(ids, indptr, indices, degree, loops, pos)

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @property
    def n_edges(self) -> int:
        return int(self.indices.shape[0] // 2)

    @property
    def d_max(self) -> int:
        return int(self.degree.max()) if self.n_nodes else 0

    def index(self, node_id: str) -> int:
        return self._pos[node_id]

    def index_of(self, node_ids: Iterable[str], strict: bool = True) -> np.ndarray:
        """Dense indices for ``node_ids``; unknown ids raise unless ``strict=False`` (then skipped)."""
        out = []
        for a in node_ids:
            i = self._pos.get(a)
            if i is None:
                if strict:
                    raise KeyError(a)
                continue
            out.append(i)
        return np.array(out, dtype=np.int64)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._pos

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def neighbor_ids(self, node_id: str) -> list[str]:
        return [self.ids[j] for j in self.neighbors(self.index(node_id))]

    def edge_pairs(self) -> np.ndarray:
        """(E, 2) array of undirected edges with ``a < b``, in CSR order."""
        src = np.repeat(np.arange(self.n_nodes), self.degree)
        mask = src < self.indices
        return np.stack([src[mask], self.indices[mask]], axis=1)

    def same_as(self, other: "Network") -> bool:
        return (
            self.ids == other.ids
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def check(self) -> None:
        """Raise AssertionError if any structural invariant is violated."""
        n = self.n_nodes
        assert self.indptr.shape == (n + 1,) and self.indptr[0] == 0
        assert np.array_equal(self.degree, np.diff(self.indptr))
        assert int(self.degree.sum()) == 2 * self.n_edges
        for i in range(n):
            nb = self.neighbors(i)
            assert np.all(np.diff(nb) > 0), f"neighbours of {self.ids[i]} not strictly sorted"
            assert not np.any(nb == i), f"self-loop on {self.ids[i]}"
        src = np.repeat(np.arange(n), self.degree)
        directed = set(zip(src.tolist(), self.indices.tolist()))
        assert all((b, a) in directed for a, b in directed), "adjacency not symmetric"
        assert len(self.edge_pairs()) == self.n_edges


def load_edges(path: str | os.PathLike) -> Network:
    """Read a tab-separated edge list.

    Lines are ``a<TAB>b`` (an undirected edge) or a lone ``a`` (declares an
    isolated node). Blank lines and lines starting with ``#`` are skipped.
    Duplicate edges collapse; self-loops are dropped and counted.
    """
    edges = []
    isolated = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) == 1 and parts[0].strip():
                isolated.append(parts[0].strip())
            elif len(parts) == 2 and parts[0].strip() and parts[1].strip():
                edges.append((parts[0].strip(), parts[1].strip()))
            else:
                raise GraphFormatError(f"{path}:{lineno}: expected '<id>\\t<id>' or '<id>', got {line!r}")
    if not edges and not isolated:
        raise GraphFormatError(f"{path}: empty graph")
    net = Network.from_edges(edges, isolated)
    if net.self_loops_dropped:
        logger.warning("%s: dropped %d self-loop(s)", path, net.self_loops_dropped)
    return net


def write_edges(network: Network, path: str | os.PathLike) -> None:
    ids = network.ids
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# undirected edge list: <id>\\t<id>; lone ids are isolated nodes\n")
        for a, b in network.edge_pairs().tolist():
            fh.write(f"{ids[a]}\t{ids[b]}\n")
        for i in np.flatnonzero(network.degree == 0).tolist():
            fh.write(f"{ids[i]}\n")


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    abstract: str
    authors: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class Corpus:
    documents: tuple[Document, ...]
    author_docs: dict  # author id -> tuple of doc ids

    @classmethod
    def from_documents(cls, documents: Iterable[Document]) -> "Corpus":
        docs = tuple(documents)
        seen = set()
        index: dict[str, list[str]] = {}
        for d in docs:
            if d.doc_id in seen:
                raise GraphFormatError(f"duplicate document id {d.doc_id!r}")
            seen.add(d.doc_id)
            for a in dict.fromkeys(d.authors):
                index.setdefault(a, []).append(d.doc_id)
        return cls(docs, {a: tuple(v) for a, v in index.items()})

    def docs_by_id(self) -> dict[str, Document]:
        return {d.doc_id: d for d in self.documents}

    def author_text(self) -> dict[str, str]:
        """Per-author pseudo-document: titles and abstracts of all their papers."""
        by_id = self.docs_by_id()
        return {
            a: " ".join(f"{by_id[d].title} {by_id[d].abstract}" for d in doc_ids)
            for a, doc_ids in self.author_docs.items()
        }


_REQUIRED = ("id", "title", "abstract", "authors")


def load_publications(path: str | os.PathLike) -> Corpus:
    """Read ``publications.jsonl`` (keys: id, title, abstract, authors)."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        record = 0
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GraphFormatError(f"{path}: record {record} (line {lineno}): invalid JSON: {exc}") from None
            if not isinstance(obj, dict):
                raise GraphFormatError(f"{path}: record {record} (line {lineno}): not an object")
            missing = [k for k in _REQUIRED if k not in obj]
            if missing:
                raise GraphFormatError(
                    f"{path}: record {record} (line {lineno}): missing field(s) {', '.join(missing)}"
                )
            authors = obj["authors"]
            if not isinstance(authors, list):
                raise GraphFormatError(f"{path}: record {record} (line {lineno}): 'authors' must be a list")
            docs.append(Document(str(obj["id"]), str(obj["title"]), str(obj["abstract"]),
                                 tuple(str(a) for a in authors)))
            record += 1
    try:
        return Corpus.from_documents(docs)
    except GraphFormatError as exc:
        raise GraphFormatError(f"{path}: {exc}") from None


def write_publications(corpus: Corpus, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in corpus.documents:
            rec = {"id": d.doc_id, "title": d.title, "abstract": d.abstract, "authors": list(d.authors)}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see a partial file."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
