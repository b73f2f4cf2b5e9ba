"""Ranking facets: global authority (PageRank), local social similarity, content relevance."""
from __future__ import annotations

import math
import re
import weakref
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._accel import common_counts_kernel, pagerank_kernel
from .graph_store import Corpus, Network
from .privacy_sim import PrivacyView

DAMPING = 0.85
TOLERANCE = 1e-10
MAX_ITER = 200

LOCAL_SIM = ("jaccard", "user_normalized")


def as_view(graph) -> PrivacyView:
    return graph if isinstance(graph, PrivacyView) else PrivacyView(graph)


@dataclass(frozen=True, eq=False)
class AuthorityMap:
    ids: tuple[str, ...]
    values: np.ndarray
    residual: float
    iterations: int
    converged: bool

    def __getitem__(self, node_id: str) -> float:
        return float(self.values[self.ids.index(node_id)])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.ids, self.values.tolist()))


def pagerank(
    view: PrivacyView | Network,
    damping: float = DAMPING,
    tolerance: float = TOLERANCE,
    max_iter: int = MAX_ITER,
) -> AuthorityMap:
    """Power-iteration PageRank over the visible undirected edges.

    Nodes with no visible edge spread their mass uniformly over all nodes.
    Stops when the L1 change drops below ``tolerance``; if ``max_iter`` is
    reached first the last iterate is returned with ``converged=False``.
    """
    view = as_view(view)
    if not 0.0 < damping < 1.0:
        raise ValueError(f"damping must be in (0, 1), got {damping}")
    n = view.n_nodes
    if n == 0:
        raise ValueError("pagerank of an empty graph")
    x, residual, it = pagerank_kernel(view.indptr, view.indices, n, float(damping), float(tolerance), int(max_iter))
    x = x / x.sum()
    x.setflags(write=False)
    return AuthorityMap(view.ids, x, float(residual), int(it), bool(residual < tolerance))


def local_similarity_vector(
    view: PrivacyView | Network,
    user_connections: Iterable[str],
    mode: str = "jaccard",
) -> np.ndarray:
    """Local similarity of every node to a querying user's connection set.

    ``jaccard``: |N(c) & C| / |N(c) | C| over visible neighbours N(c);
    ``user_normalized``: |N(c) & C| / |C|. Both are 0 when the denominator is 0.
    Connections that are not network nodes still count towards |C|.
    """
    if mode not in LOCAL_SIM:
        raise ValueError(f"local similarity mode must be one of {LOCAL_SIM}")
    view = as_view(view)
    conns = set(user_connections)
    n = view.n_nodes
    if not conns:
        return np.zeros(n)
    src = view.base.index_of(sorted(conns), strict=False)
    inter = common_counts_kernel(view.indptr, view.indices, src, n).astype(np.float64)
    if mode == "user_normalized":
        return inter / len(conns)
    union = view.degree + len(conns) - inter
    return np.divide(inter, union, out=np.zeros(n), where=union > 0)


def local_similarity(user_connections: Iterable[str], candidate: str, view: PrivacyView | Network,
                     mode: str = "jaccard") -> float:
    view = as_view(view)
    conns = set(user_connections)
    if candidate not in view.base:
        return 0.0
    nbrs = {view.ids[j] for j in view.neighbors(view.base.index(candidate)).tolist()}
    inter = len(nbrs & conns)
    if mode == "user_normalized":
        return inter / len(conns) if conns else 0.0
    union = len(nbrs | conns)
    return inter / union if union else 0.0


# ---------------------------------------------------------------------------
# Content relevance (BM25 over per-author pseudo-documents)
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"[0-9a-z]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class ContentIndex:
    """BM25 inverted index whose documents are authors.

    An author's pseudo-document concatenates the titles and abstracts of all
    their papers. Collection statistics (document count, average length,
    document frequencies) cover every author with at least one paper.
    IDF is ``ln(1 + (n - df + 0.5) / (df + 0.5))``.
    """

    def __init__(self, corpus: Corpus, k1: float = 1.2, b: float = 0.75):
        self.k1 = k1
        self.b = b
        texts = corpus.author_text()
        self.authors = tuple(sorted(texts))
        self._row = {a: i for i, a in enumerate(self.authors)}
        lengths = np.zeros(len(self.authors))
        postings: dict[str, tuple[list[int], list[int]]] = {}
        for i, a in enumerate(self.authors):
            counts = Counter(tokenize(texts[a]))
            lengths[i] = sum(counts.values())
            for term, tf in counts.items():
                rows, tfs = postings.setdefault(term, ([], []))
                rows.append(i)
                tfs.append(tf)
        self.doc_len = lengths
        self.n_docs = len(self.authors)
        self.avgdl = float(lengths.mean()) if self.n_docs else 0.0
        self.postings = {t: (np.array(r, dtype=np.int64), np.array(f, dtype=np.float64))
                         for t, (r, f) in postings.items()}

    def idf(self, term: str) -> float:
        p = self.postings.get(term)
        df = 0 if p is None else p[0].shape[0]
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))

    def author_scores(self, query: str) -> np.ndarray:
        terms = tokenize(query)
        if not terms:
            raise ValueError("empty query")
        out = np.zeros(self.n_docs)
        if self.avgdl == 0:
            return out
        norm = self.k1 * (1.0 - self.b + self.b * self.doc_len / self.avgdl)
        for term in terms:
            p = self.postings.get(term)
            if p is None:
                continue
            rows, tf = p
            out[rows] += self.idf(term) * tf * (self.k1 + 1.0) / (tf + norm[rows])
        return out

    def score_vector(self, query: str, ids: Sequence[str]) -> np.ndarray:
        """BM25 scores aligned to ``ids``; 0 for ids with no papers."""
        scores = self.author_scores(query)
        out = np.zeros(len(ids))
        for j, a in enumerate(ids):
            r = self._row.get(a)
            if r is not None:
                out[j] = scores[r]
        return out

    def score(self, query: str, author: str) -> float:
        r = self._row.get(author)
        scores = self.author_scores(query)
        return 0.0 if r is None else float(scores[r])


_INDEX_CACHE: "weakref.WeakKeyDictionary[Corpus, ContentIndex]" = weakref.WeakKeyDictionary()


def content_index(corpus: Corpus) -> ContentIndex:
    idx = _INDEX_CACHE.get(corpus)
    if idx is None:
        idx = _INDEX_CACHE[corpus] = ContentIndex(corpus)
    return idx


def content_score(corpus: Corpus, query: str, candidate: str) -> float:
    return content_index(corpus).score(query, candidate)


# ---------------------------------------------------------------------------
# Score integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightVector:
    w_c: float
    w_g: float
    w_l: float

    def __post_init__(self):
        for name in ("w_c", "w_g", "w_l"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.w_c, self.w_g, self.w_l)

    @property
    def is_zero(self) -> bool:
        return self.w_c == 0 and self.w_g == 0 and self.w_l == 0


@dataclass(frozen=True)
class ScoredCandidate:
    candidate: str
    s_c: float
    s_g: float
    s_l: float
    s: float


def content_facet(raw: np.ndarray) -> np.ndarray:
    return np.log1p(raw)


def authority_facet(authority: AuthorityMap | np.ndarray) -> np.ndarray:
    # scaled by N so the uniform authority maps to raw 1 before the log
    values = authority.values if isinstance(authority, AuthorityMap) else np.asarray(authority)
    return np.log1p(values * values.shape[0])


def local_facet(raw: np.ndarray) -> np.ndarray:
    return np.log1p(raw)


def integrate(weights: WeightVector | tuple, s_c: np.ndarray, s_g: np.ndarray, s_l: np.ndarray) -> np.ndarray:
    """Linear combination ``w_c*S_C + w_g*S_G + w_l*S_L``, evaluated left to right."""
    w_c, w_g, w_l = weights.as_tuple() if isinstance(weights, WeightVector) else weights
    return w_c * s_c + w_g * s_g + w_l * s_l


def ranking_order(scores: np.ndarray) -> np.ndarray:
    """Dense indices sorted by score descending, ties by ascending index (= ascending id)."""
    return np.lexsort((np.arange(scores.shape[0]), -scores))


def facet_scores(
    query: str,
    user_connections: Iterable[str],
    view: PrivacyView | Network,
    authority: AuthorityMap,
    corpus: Corpus,
    local_sim: str = "jaccard",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    view = as_view(view)
    if authority.ids != view.ids:
        raise ValueError("authority map was computed on a different node universe")
    s_c = content_facet(content_index(corpus).score_vector(query, view.ids))
    s_g = authority_facet(authority)
    s_l = local_facet(local_similarity_vector(view, user_connections, local_sim))
    return s_c, s_g, s_l


def rank_candidates(
    query: str,
    user_connections: Iterable[str],
    view: PrivacyView | Network,
    authority: AuthorityMap,
    weights: WeightVector,
    corpus: Corpus,
    local_sim: str = "jaccard",
) -> list[ScoredCandidate]:
    """Rank every node of the view for ``query``; see :func:`integrate` for the score."""
    view = as_view(view)
    s_c, s_g, s_l = facet_scores(query, user_connections, view, authority, corpus, local_sim)
    s = integrate(weights, s_c, s_g, s_l)
    ids = view.ids
    return [ScoredCandidate(ids[i], float(s_c[i]), float(s_g[i]), float(s_l[i]), float(s[i]))
            for i in ranking_order(s).tolist()]
