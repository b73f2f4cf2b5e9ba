"""Measurement: authority MAE, average precision, weight-grid search, MAP, signed-rank test."""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from ._accel import ap_grid_kernel
from .features import AuthorityMap, WeightVector, facet_scores
from .graph_store import Corpus, GraphFormatError, Network

RELEVANCE_THRESHOLD = 3  # ratings strictly above this are relevant


@dataclass(frozen=True)
class QueryTask:
    user_id: str
    user_connections: tuple[str, ...]
    queries: tuple[str, ...]
    ground_truth: tuple[tuple[str, float], ...]
    task_id: str = ""

    def __post_init__(self):
        if not self.queries:
            raise ValueError(f"task {self.task_id or self.user_id!r} has no queries")
        if not self.relevant:
            raise ValueError(f"task {self.task_id or self.user_id!r} has no candidate rated above "
                             f"{RELEVANCE_THRESHOLD}; its queries are not effective")

    @property
    def relevant(self) -> frozenset[str]:
        return frozenset(c for c, r in self.ground_truth if r > RELEVANCE_THRESHOLD)


def load_tasks(path: str | os.PathLike) -> list[QueryTask]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise GraphFormatError(f"{path}: expected a JSON array of task records")
    tasks = []
    for i, rec in enumerate(data):
        try:
            gt = tuple((str(g["candidate_id"]), float(g["rating"])) for g in rec["ground_truth"])
            tasks.append(QueryTask(
                user_id=str(rec["user_id"]),
                user_connections=tuple(str(c) for c in rec["user_connections"]),
                queries=tuple(str(q) for q in rec["queries"]),
                ground_truth=gt,
                task_id=str(rec.get("task_id", i)),
            ))
        except (KeyError, TypeError) as exc:
            raise GraphFormatError(f"{path}: task {i}: missing or malformed field {exc}") from None
        except ValueError as exc:
            raise GraphFormatError(f"{path}: task {i}: {exc}") from None
    return tasks


def tasks_to_json(tasks: Sequence[QueryTask]) -> str:
    recs = [{
        "task_id": t.task_id,
        "user_id": t.user_id,
        "user_connections": list(t.user_connections),
        "queries": list(t.queries),
        "ground_truth": [{"candidate_id": c, "rating": r} for c, r in t.ground_truth],
    } for t in tasks]
    return json.dumps(recs, indent=1) + "\n"


def mae(truth: AuthorityMap, degraded: AuthorityMap) -> float:
    """Mean absolute difference over all nodes."""
    if truth.ids != degraded.ids:
        raise ValueError("authority maps cover different node universes")
    return float(np.abs(truth.values - degraded.values).mean())


def average_precision(ranking: Sequence[str], relevant: Iterable[str]) -> float:
    """Mean of precision@rank over relevant items; unranked relevant items contribute 0."""
    rel = set(relevant)
    if not rel:
        raise ValueError("empty relevant set: the query is not effective")
    hits = 0
    total = 0.0
    for rank, c in enumerate(ranking, start=1):
        if c in rel:
            hits += 1
            total += hits / rank
    return total / len(rel)


def map_metric(per_query_aps: Sequence[float]) -> float:
    if len(per_query_aps) == 0:
        raise ValueError("MAP of an empty query list")
    return float(sum(per_query_aps) / len(per_query_aps))


# ---------------------------------------------------------------------------
# Weight grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightGrid:
    """Regular grid over [0, 1]^3; ``pinned`` fixes a facet weight (e.g. ``{"w_l": 0.0}``).

    Points come out in lexicographic (w_c, w_g, w_l) order; all-zero points are skipped.
    """

    step: float = 0.05
    pinned: Mapping[str, float] = field(default_factory=dict)

    def axis(self) -> list[float]:
        k = int(round(1.0 / self.step))
        if k < 1 or abs(k * self.step - 1.0) > 1e-9:
            raise ValueError(f"grid step must divide 1 evenly, got {self.step}")
        return [i / k for i in range(k + 1)]

    def points(self) -> np.ndarray:
        axes = []
        for name in ("w_c", "w_g", "w_l"):
            axes.append([float(self.pinned[name])] if name in self.pinned else self.axis())
        pts = np.array([(a, b, c) for a in axes[0] for b in axes[1] for c in axes[2]], dtype=np.float64)
        pts = pts[np.any(pts != 0, axis=1)]
        if pts.shape[0] == 0:
            raise ValueError("weight grid has no non-zero point")
        return pts


def explicit_grid(points: Iterable[Sequence[float]]) -> np.ndarray:
    pts = np.array(sorted(tuple(map(float, p)) for p in points), dtype=np.float64).reshape(-1, 3)
    pts = pts[np.any(pts != 0, axis=1)]
    if pts.shape[0] == 0:
        raise ValueError("weight grid has no non-zero point")
    return pts


def _as_points(grid) -> np.ndarray:
    if isinstance(grid, WeightGrid):
        return grid.points()
    return explicit_grid(grid)


def relevant_positions(ids: Sequence[str] | Network, relevant: Iterable[str]) -> tuple[np.ndarray, int]:
    """Dense positions of relevant ids present in ``ids`` plus the total relevant count."""
    rel = set(relevant)
    if not rel:
        raise ValueError("empty relevant set: the query is not effective")
    if isinstance(ids, Network):
        pos = ids.index_of(sorted(rel), strict=False)
    else:
        lookup = {c: i for i, c in enumerate(ids)}
        pos = np.array(sorted(lookup[c] for c in rel if c in lookup), dtype=np.int64)
    return np.sort(pos).astype(np.int64), len(rel)


def ap_over_grid(s_c, s_g, s_l, rel_pos: np.ndarray, n_relevant: int, points: np.ndarray) -> np.ndarray:
    """AP of the ranking induced by each weight vector in ``points`` (rows of w_c, w_g, w_l)."""
    return ap_grid_kernel(
        np.ascontiguousarray(s_c, dtype=np.float64),
        np.ascontiguousarray(s_g, dtype=np.float64),
        np.ascontiguousarray(s_l, dtype=np.float64),
        np.ascontiguousarray(rel_pos, dtype=np.int64),
        int(n_relevant),
        np.ascontiguousarray(points, dtype=np.float64),
    )


def argmax_lexicographic(values: np.ndarray, points: np.ndarray) -> int:
    """Index of the maximum; ties resolved to the lexicographically smallest point."""
    best = values.max()
    cands = np.flatnonzero(values == best)
    order = np.lexsort((points[cands, 2], points[cands, 1], points[cands, 0]))
    return int(cands[order[0]])


def best_weight_ap(
    query: str,
    task: QueryTask,
    view,
    authority: AuthorityMap,
    corpus: Corpus,
    grid: WeightGrid | Iterable[Sequence[float]] = WeightGrid(),
    user_connections: Iterable[str] | None = None,
    local_sim: str = "jaccard",
) -> tuple[float, WeightVector]:
    """Maximum AP over the grid and the weight vector attaining it."""
    conns = task.user_connections if user_connections is None else user_connections
    s_c, s_g, s_l = facet_scores(query, conns, view, authority, corpus, local_sim)
    pts = _as_points(grid)
    base = view.base if hasattr(view, "base") else view
    rel_pos, n_rel = relevant_positions(base, task.relevant)
    aps = ap_over_grid(s_c, s_g, s_l, rel_pos, n_rel, pts)
    i = argmax_lexicographic(aps, pts)
    return float(aps[i]), WeightVector(*pts[i].tolist())


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank test
# ---------------------------------------------------------------------------

EXACT_MAX_N = 25


@dataclass(frozen=True)
class SignedRankResult:
    statistic: float  # min(W+, W-)
    p_value: float  # two-sided
    n: int  # non-zero differences used
    w_plus: float
    method: str


def _exact_upper_tail(ranks2: np.ndarray, w2: int) -> tuple[float, float]:
    """P(W+ <= w) and P(W+ >= w) under H0, on doubled (integer) ranks."""
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in ranks2.tolist():
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:-r]
        counts += shifted
    counts /= counts.sum()
    return float(counts[:w2 + 1].sum()), float(counts[w2:].sum())


def wilcoxon_signed_rank(pairs: Sequence[tuple[float, float]], method: str = "auto") -> SignedRankResult:
    """Paired two-sided Wilcoxon signed-rank test of A against B.

    Zero differences are dropped and tied |differences| share average ranks.
    ``auto`` uses the exact null distribution for n <= 25 and the normal
    approximation (tie-corrected variance, continuity correction) above.
    """
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    d = np.array([a - b for a, b in pairs], dtype=np.float64)
    d = d[d != 0]
    n = d.shape[0]
    if n < 5:
        raise ValueError(f"signed-rank test needs at least 5 non-zero differences, got {n}")
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    stat = min(w_plus, w_minus)
    if method == "exact" or (method == "auto" and n <= EXACT_MAX_N):
        ranks2 = np.rint(2 * ranks).astype(np.int64)
        lo, hi = _exact_upper_tail(ranks2, int(round(2 * w_plus)))
        p = min(1.0, 2.0 * min(lo, hi))
        return SignedRankResult(stat, p, n, w_plus, "exact")
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - (tie_counts ** 3 - tie_counts).sum() / 48.0
    z = (abs(w_plus - mean) - 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * float(norm.sf(max(z, 0.0))))
    return SignedRankResult(stat, p, n, w_plus, "approx")
