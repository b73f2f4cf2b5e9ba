"""Synthetic scale-free coauthor networks, corpora and query tasks."""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluation import QueryTask, tasks_to_json
from .graph_store import Corpus, Document, Network, atomic_write_text, write_edges, write_publications


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class SynthSpec:
    n: int = 10_000
    m: int = 5
    vocab_size: int = 2_000
    docs_per_author: float = 3.0
    n_tasks: int = 40
    queries_per_task: int = 3
    relevant_per_task: int = 5
    seed: int = 20140706
    n_topics: int = 10
    topic_word_share: float = 0.35  # chance that a token comes from the author's topic vocabulary
    title_len: int = 8
    abstract_len: int = 40
    query_len: int = 3
    coauthor_share: float = 0.3  # chance that a paper lists one coauthor

    def __post_init__(self):
        if not (self.n > self.m >= 1):
            raise SynthError(f"need n > m >= 1, got n={self.n}, m={self.m}")
        for name in ("vocab_size", "n_tasks", "queries_per_task", "relevant_per_task", "n_topics",
                     "title_len", "abstract_len", "query_len"):
            if getattr(self, name) < 1:
                raise SynthError(f"{name} must be positive")
        if self.docs_per_author < 1:
            raise SynthError("docs_per_author must be >= 1")
        if self.vocab_size < 2 * self.n_topics:
            raise SynthError("vocab_size too small for the number of topics")


def node_ids(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"a{i:0{width}d}" for i in range(n)]


def _stream(spec: SynthSpec, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=(tag,)))


def ba_graph(spec: SynthSpec) -> Network:
    """Preferential attachment from an m-clique; each new node adds m distinct edges.

    Edge count is ``m(m-1)/2 + (n-m)m``. Targets are drawn from the endpoint
    list (degree-proportional) with rejection of duplicates; when no edge exists
    yet (m = 1) the first target is uniform.
    """
    n, m = spec.n, spec.m
    rng = _stream(spec, 0)
    n_edges = m * (m - 1) // 2 + (n - m) * m
    src = np.empty(n_edges, dtype=np.int64)
    dst = np.empty(n_edges, dtype=np.int64)
    ends = np.empty(2 * n_edges, dtype=np.int64)
    e = 0
    for a in range(m):
        for b in range(a + 1, m):
            src[e], dst[e] = a, b
            ends[2 * e], ends[2 * e + 1] = a, b
            e += 1
    for v in range(m, n):
        n_ends = 2 * e
        chosen: list[int] = []
        while len(chosen) < m:
            t = int(rng.integers(v)) if n_ends == 0 else int(ends[rng.integers(n_ends)])
            if t not in chosen:
                chosen.append(t)
        for t in chosen:
            src[e], dst[e] = v, t
            ends[2 * e], ends[2 * e + 1] = v, t
            e += 1
    return Network.from_index_edges(node_ids(n), src, dst)


def _vocabulary(spec: SynthSpec) -> tuple[list[np.ndarray], np.ndarray, list[str]]:
    words = [f"w{i:05d}" for i in range(spec.vocab_size)]
    per_topic = max(2, spec.vocab_size // (2 * spec.n_topics))
    topic_vocab = [np.arange(t * per_topic, (t + 1) * per_topic) for t in range(spec.n_topics)]
    background = np.arange(spec.n_topics * per_topic, spec.vocab_size)
    return topic_vocab, background, words


def _two_hop(network: Network, u: int) -> np.ndarray:
    first = network.neighbors(u)
    second = [network.neighbors(v) for v in first.tolist()]
    reach = np.unique(np.concatenate([first, *second])) if len(first) else first
    return reach[reach != u]


def synth_tasks(network: Network, spec: SynthSpec) -> tuple[Corpus, list[QueryTask]]:
    """Topic-labelled corpus plus user tasks whose answers sit within 2 hops of the user.

    Every author gets a topic and ``~docs_per_author`` papers mixing topic and
    background words. A task picks a querying user and a topic; relevant
    candidates are topic members within 2 hops of the user, drawn with weight
    ``degree * (1 + common neighbours with the user)`` so that both network
    facets carry signal. Queries are drawn from the topic vocabulary and the
    user's oracle connections are their true neighbours.
    """
    n = network.n_nodes
    if n < spec.relevant_per_task + 2:
        raise SynthError("network too small for the requested tasks")
    ids = network.ids
    topic_vocab, background, words = _vocabulary(spec)
    rng_doc = _stream(spec, 1)
    topic = rng_doc.integers(spec.n_topics, size=n)

    docs = []
    doc_len = spec.title_len + spec.abstract_len
    n_docs = 1 + rng_doc.poisson(spec.docs_per_author - 1.0, size=n)
    for a in range(n):
        tv = topic_vocab[topic[a]]
        for k in range(int(n_docs[a])):
            from_topic = rng_doc.random(doc_len) < spec.topic_word_share
            toks = np.where(from_topic,
                            tv[rng_doc.integers(tv.shape[0], size=doc_len)],
                            background[rng_doc.integers(background.shape[0], size=doc_len)])
            text = [words[w] for w in toks.tolist()]
            authors = [ids[a]]
            nbrs = network.neighbors(a)
            if len(nbrs) and rng_doc.random() < spec.coauthor_share:
                authors.append(ids[int(nbrs[rng_doc.integers(len(nbrs))])])
            docs.append(Document(f"p{a}_{k}", " ".join(text[:spec.title_len]),
                                 " ".join(text[spec.title_len:]), tuple(authors)))
    corpus = Corpus.from_documents(docs)

    rng_task = _stream(spec, 2)
    eligible = np.flatnonzero(network.degree >= 2)
    if eligible.shape[0] < spec.n_tasks:
        raise SynthError("network too small: not enough users with two or more connections")
    order = rng_task.permutation(eligible)
    tasks = []
    for u in order.tolist():
        if len(tasks) == spec.n_tasks:
            break
        reach = _two_hop(network, u)
        t = int(rng_task.integers(spec.n_topics))
        pool = reach[topic[reach] == t]
        if pool.shape[0] < spec.relevant_per_task:
            continue
        user_nbrs = set(network.neighbors(u).tolist())
        common = np.array([len(user_nbrs.intersection(network.neighbors(c).tolist())) for c in pool.tolist()])
        w = network.degree[pool] * (1.0 + common)
        pick = rng_task.choice(pool.shape[0], size=spec.relevant_per_task, replace=False, p=w / w.sum())
        relevant = sorted(ids[c] for c in pool[pick].tolist())
        tv = topic_vocab[t]
        queries = tuple(
            " ".join(words[x] for x in rng_task.choice(tv, size=min(spec.query_len, tv.shape[0]), replace=False).tolist())
            for _ in range(spec.queries_per_task)
        )
        tasks.append(QueryTask(
            user_id=ids[u],
            user_connections=tuple(ids[v] for v in sorted(user_nbrs)),
            queries=queries,
            ground_truth=tuple((c, 5.0) for c in relevant),
            task_id=f"t{len(tasks):03d}",
        ))
    if len(tasks) < spec.n_tasks:
        raise SynthError(f"network too small for the requested hop structure: built {len(tasks)} of "
                         f"{spec.n_tasks} tasks")
    return corpus, tasks


def write_dataset(out_dir: str | os.PathLike, spec: SynthSpec) -> dict[str, Path]:
    """Generate and write edges.tsv, publications.jsonl and tasks.json under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    net = ba_graph(spec)
    corpus, tasks = synth_tasks(net, spec)
    paths = {"edges": out / "edges.tsv", "publications": out / "publications.jsonl", "tasks": out / "tasks.json"}
    tmp_edges = out / ".edges.tsv.tmp"
    write_edges(net, tmp_edges)
    os.replace(tmp_edges, paths["edges"])
    tmp_pubs = out / ".publications.jsonl.tmp"
    write_publications(corpus, tmp_pubs)
    os.replace(tmp_pubs, paths["publications"])
    atomic_write_text(paths["tasks"], tasks_to_json(tasks))
    return paths
