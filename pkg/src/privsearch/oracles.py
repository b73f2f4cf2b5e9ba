"""Brute-force reference computations for small instances.

Each oracle takes a deliberately different route from the production code
(enumeration, dense linear algebra, naive loops) so agreement is meaningful.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.stats import chisquare, rankdata


def sequential_draw_probabilities(weights: Sequence[float], k: int) -> dict[tuple[int, ...], float]:
    """Probability of every ordered sequence of ``k`` draws without replacement.

    Each draw picks a remaining item with probability weight / remaining total.
    """
    w = [Fraction(x).limit_denominator(10**12) for x in weights]
    out = {}
    for seq in itertools.permutations(range(len(w)), k):
        p = Fraction(1)
        remaining = sum(w)
        for i in seq:
            if remaining == 0:
                p = Fraction(0)
                break
            p *= w[i] / remaining
            remaining -= w[i]
        if p:
            out[seq] = float(p)
    return out


def set_probabilities(weights: Sequence[float], k: int) -> dict[frozenset, float]:
    out: dict[frozenset, float] = {}
    for seq, p in sequential_draw_probabilities(weights, k).items():
        key = frozenset(seq)
        out[key] = out.get(key, 0.0) + p
    return out


def first_draw_probabilities(weights: Sequence[float]) -> list[float]:
    s = float(sum(weights))
    return [w / s for w in weights]


def dense_pagerank(n: int, edges: Sequence[tuple[int, int]], damping: float = 0.85) -> np.ndarray:
    """Solve (I - d M) x = (1 - d)/N * 1 with M column-stochastic; dangling columns are uniform."""
    a = np.zeros((n, n))
    for u, v in edges:
        a[u, v] = a[v, u] = 1.0
    deg = a.sum(axis=0)
    m = np.where(deg > 0, a / np.where(deg > 0, deg, 1.0), 1.0 / n)
    x = np.linalg.solve(np.eye(n) - damping * m, np.full(n, (1.0 - damping) / n))
    return x / x.sum()


def signed_rank_enumeration(diffs: Sequence[float]) -> tuple[float, float]:
    """(min(W+, W-), two-sided p) by enumerating all 2^n sign assignments of the ranks."""
    d = np.array([x for x in diffs if x != 0], dtype=np.float64)
    n = d.shape[0]
    ranks = rankdata(np.abs(d))
    w_plus = ranks[d > 0].sum()
    total = ranks.sum()
    stat = min(w_plus, total - w_plus)
    below = above = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        if w <= w_plus + 1e-9:
            below += 1
        if w >= w_plus - 1e-9:
            above += 1
    p = min(1.0, 2.0 * min(below, above) / 2**n)
    return float(stat), p


def naive_best_ap(rank_fn: Callable[[tuple], Sequence[str]], relevant: set, points) -> tuple[float, tuple]:
    """Loop over grid points, rank from scratch, compute AP by hand; first maximum wins."""
    best, arg = -1.0, None
    for p in sorted(tuple(map(float, q)) for q in points):
        if not any(p):
            continue
        ranking = rank_fn(p)
        hits, acc = 0, 0.0
        for i, c in enumerate(ranking, start=1):
            if c in relevant:
                hits += 1
                acc += hits / i
        ap = acc / len(relevant)
        if ap > best:
            best, arg = ap, p
    return best, arg


def run_all(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Small-instance checks of the production code against the oracles above."""
    from .evaluation import average_precision, best_weight_ap, QueryTask, wilcoxon_signed_rank
    from .features import pagerank, rank_candidates, WeightVector
    from .graph_store import Corpus, Document, Network
    from .privacy_sim import PrivacyView, draw_order

    rng = np.random.default_rng(seed)
    checks = []

    # sampling: degrees 1, 2, 4 under lambda = +1 give weights 1/4, 1/2, 1
    w = np.array([1.0, 2.0, 4.0]) / 4.0
    trials = 20_000
    firsts = np.bincount([draw_order(w, 1, np.random.SeedSequence([seed, t]))[0] for t in range(trials)], minlength=3)
    freq = firsts / trials
    expect = first_draw_probabilities(w)
    ok = bool(np.all(np.abs(freq - expect) <= 0.01))
    checks.append(("first-draw frequencies {1/7,2/7,4/7}", ok, f"observed {np.round(freq, 4).tolist()}"))
    probs = set_probabilities(w, 2)
    keys = sorted(probs, key=sorted)
    sets = [frozenset(draw_order(w, 2, np.random.SeedSequence([seed, 1, t])).tolist()) for t in range(trials)]
    obs = np.array([sum(s == k for s in sets) for k in keys])
    p = chisquare(obs, np.array([probs[k] for k in keys]) * trials).pvalue
    checks.append(("two-draw set frequencies vs enumeration", bool(p > 0.01), f"chi-square p = {p:.3f}"))

    # pagerank vs dense solve on random graphs, with and without hidden nodes
    worst = 0.0
    for g in range(10):
        n = int(rng.integers(2, 30))
        edges = {(int(a), int(b)) for a, b in rng.integers(n, size=(2 * n, 2)) if a != b}
        ids = [f"n{i:02d}" for i in range(n)]
        net_g = Network.from_edges([(ids[a], ids[b]) for a, b in edges], ids)
        hidden = rng.choice(n, size=int(rng.integers(0, n)), replace=False)
        view = PrivacyView(net_g, hidden)
        visible = [(a, b) for a, b in edges if a not in set(hidden.tolist()) and b not in set(hidden.tolist())]
        ref = dense_pagerank(n, visible)
        worst = max(worst, float(np.abs(pagerank(view).values - ref).max()))
    checks.append(("pagerank vs dense linear solve", worst <= 1e-8, f"max abs diff {worst:.2e}"))

    # AP and grid search on a toy corpus
    docs = [Document("d1", "graph mining", "mining large graph data", ("n00",)),
            Document("d2", "privacy", "privacy of social graph", ("n01", "n02")),
            Document("d3", "search", "people search ranking", ("n03",))]
    corpus = Corpus.from_documents(docs)
    toy = Network.from_edges([("n00", "n01"), ("n01", "n02"), ("n02", "n03"), ("n03", "n04"), ("n04", "n05"),
                              ("n00", "n05")])
    task = QueryTask("n04", ("n03", "n05"), ("graph search",), (("n00", 5.0), ("n03", 4.0), ("n02", 2.0)))
    auth = pagerank(toy)
    grid = [(a / 4, b / 4, c / 4) for a in range(5) for b in range(5) for c in range(5)]
    got, _ = best_weight_ap("graph search", task, toy, auth, corpus, grid)
    ref, _ = naive_best_ap(lambda p: [s.candidate for s in rank_candidates(
        "graph search", task.user_connections, toy, auth, WeightVector(*p), corpus)], set(task.relevant), grid)
    checks.append(("best_weight_ap vs naive grid loop", abs(got - ref) <= 1e-12, f"{got:.6f} vs {ref:.6f}"))
    ap = average_precision(["x", "r1", "y", "r2"], {"r1", "r2"})
    checks.append(("AP at ranks 2 and 4", abs(ap - 0.5) <= 1e-12, f"{ap}"))

    # signed-rank exact distribution vs sign enumeration
    worst = 0.0
    for n in range(5, 11):
        pairs = [(float(a), float(b)) for a, b in rng.integers(0, 6, size=(n + 3, 2))]
        diffs = [a - b for a, b in pairs]
        if sum(1 for x in diffs if x) < 5:
            continue
        res = wilcoxon_signed_rank(pairs, method="exact")
        stat, p = signed_rank_enumeration(diffs)
        worst = max(worst, abs(res.p_value - p), abs(res.statistic - stat))
    checks.append(("signed-rank exact vs enumeration", worst <= 1e-9, f"max diff {worst:.2e}"))
    return checks
