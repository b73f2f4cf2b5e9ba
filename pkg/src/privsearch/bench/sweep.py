"""Experiment sweeps over privacy parameters, producing one row per (cell, run, metric)."""
from __future__ import annotations

import dataclasses
import logging
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import yaml

from ..evaluation import QueryTask, WeightGrid, ap_over_grid, argmax_lexicographic, load_tasks, mae, relevant_positions
from ..features import (LOCAL_SIM, AuthorityMap, WeightVector, authority_facet, content_facet, content_index,
                        local_facet, local_similarity_vector, pagerank)
from ..graph_store import Corpus, Network, load_edges, load_publications
from ..privacy_sim import (EDGE_VISIBILITY, PrivacyConfig, PrivacyView, candidate_seed, mask_user_connections,
                           sample_private_set, user_seed)

logger = logging.getLogger(__name__)

EXPERIMENTS = ("global_mae", "global_search", "local_search", "user_privacy")
SEARCH_EXPERIMENTS = ("global_search", "local_search", "user_privacy")

MAE_LAMBDAS = (-1.0, -0.5, 0.0, 0.5, 1.0)
SEARCH_LAMBDAS = (-1.0, 0.0, 1.0)
DEFAULT_PBS = tuple(round(0.1 * i, 10) for i in range(1, 10))
DEFAULT_PCS = tuple(round(0.1 * i, 10) for i in range(0, 11))

# weights reported for the full network; local_search reads the second reported
# value as w_l since w_g is pinned to 0 in that experiment
GLOBAL_WEIGHTS = (1.0, 0.1, 0.0)
LOCAL_WEIGHTS = (1.0, 0.0, 0.082)


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    lam: float | None
    pb: float | None
    pc: float | None
    run: int | None
    metric: str
    value: float


@dataclass
class SweepConfig:
    experiments: tuple[str, ...] = EXPERIMENTS
    lambdas: tuple[float, ...] | None = None  # None: per-experiment defaults
    pbs: tuple[float, ...] = DEFAULT_PBS
    pcs: tuple[float, ...] = DEFAULT_PCS
    runs: int = 10
    seed: int = 0
    edges: str | None = None
    publications: str | None = None
    tasks: str | None = None
    out: str = "results"
    workers: int = 1
    grid_step: float = 0.05
    tune: bool = False
    global_weights: tuple[float, float, float] = GLOBAL_WEIGHTS
    local_weights: tuple[float, float, float] = LOCAL_WEIGHTS
    damping: float = 0.85
    tolerance: float = 1e-10
    max_iter: int = 200
    edge_visibility: str = "both_public"
    local_sim: str = "jaccard"
    exclude_querying_users: bool = True

    def __post_init__(self):
        self.experiments = tuple(self.experiments)
        bad = [e for e in self.experiments if e not in EXPERIMENTS]
        if bad or not self.experiments:
            raise ValueError(f"experiments must be a non-empty subset of {EXPERIMENTS}, got {self.experiments}")
        if self.lambdas is not None:
            self.lambdas = tuple(float(x) for x in self.lambdas)
            if not self.lambdas:
                raise ValueError("lambdas must be non-empty")
        self.pbs = tuple(float(x) for x in self.pbs)
        self.pcs = tuple(float(x) for x in self.pcs)
        for name, vals in (("pbs", self.pbs), ("pcs", self.pcs)):
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            if any(not 0.0 <= v <= 1.0 for v in vals):
                raise ValueError(f"{name} values must lie in [0, 1]")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0.0 < self.damping < 1.0:
            raise ValueError("damping must be in (0, 1)")
        if self.edge_visibility not in EDGE_VISIBILITY:
            raise ValueError(f"edge_visibility must be one of {EDGE_VISIBILITY}")
        if self.local_sim not in LOCAL_SIM:
            raise ValueError(f"local_sim must be one of {LOCAL_SIM}")
        self.global_weights = tuple(WeightVector(*map(float, self.global_weights)).as_tuple())
        self.local_weights = tuple(WeightVector(*map(float, self.local_weights)).as_tuple())
        WeightGrid(self.grid_step).axis()
        if self.edges is None:
            raise ValueError("an edge list path ('edges') is required")
        if any(e in SEARCH_EXPERIMENTS for e in self.experiments) and (self.publications is None or self.tasks is None):
            raise ValueError("search experiments need 'publications' and 'tasks' paths")

    def lambdas_for(self, experiment: str) -> tuple[float, ...]:
        if self.lambdas is not None:
            return self.lambdas
        return MAE_LAMBDAS if experiment == "global_mae" else SEARCH_LAMBDAS

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "SweepConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
        kw = {}
        for k, v in data.items():
            if k in ("experiments", "lambdas", "pbs", "pcs", "global_weights", "local_weights") and v is not None:
                v = tuple([v] if isinstance(v, (int, float, str)) else v)
            kw[k] = v
        return cls(**kw)


def read_config_file(path: str | os.PathLike) -> dict[str, Any]:
    """Flat YAML mapping of SweepConfig keys (relative paths resolve against the file)."""
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a key-value mapping")
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ValueError(f"{path}: config keys must be flat, nested: {', '.join(nested)}")
    base = os.path.dirname(os.path.abspath(path))
    for key in ("edges", "publications", "tasks", "out"):
        if isinstance(data.get(key), str) and not os.path.isabs(data[key]):
            data[key] = os.path.join(base, data[key])
    return data


# ---------------------------------------------------------------------------
# Shared sweep state
# ---------------------------------------------------------------------------

@dataclass
class SweepContext:
    config: SweepConfig
    network: Network
    tasks: list[QueryTask] = field(default_factory=list)
    content: list[list[np.ndarray]] = field(default_factory=list)  # per task, per query: S_C over all nodes
    relevant: list[tuple[np.ndarray, int]] = field(default_factory=list)
    users: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    baseline_authority: AuthorityMap | None = None
    weights: dict[str, tuple[float, float, float]] = field(default_factory=dict)

    def authority(self, view: PrivacyView) -> AuthorityMap:
        c = self.config
        return pagerank(view, c.damping, c.tolerance, c.max_iter)

    def task_maps(self, view: PrivacyView, weights, connections: Sequence[Sequence[str]] | None,
                  authority: AuthorityMap | None = None) -> np.ndarray:
        """Per-task MAP at fixed weights. ``connections=None`` disables the local facet."""
        w = np.array([weights], dtype=np.float64)
        n = self.network.n_nodes
        s_g = authority_facet(authority) if weights[1] != 0 else np.zeros(n)
        out = np.empty(len(self.tasks))
        for t, task in enumerate(self.tasks):
            if connections is None or weights[2] == 0:
                s_l = np.zeros(n)
            else:
                s_l = local_facet(local_similarity_vector(view, connections[t], self.config.local_sim))
            rel_pos, n_rel = self.relevant[t]
            aps = [ap_over_grid(s_c, s_g, s_l, rel_pos, n_rel, w)[0] for s_c in self.content[t]]
            out[t] = sum(aps) / len(aps)
        return out

    def private_set(self, lam: float, pb: float, run: int, exclude_users: bool) -> np.ndarray:
        c = self.config
        pcfg = PrivacyConfig(lam, pb, 1.0, c.runs, c.seed, c.edge_visibility, exclude_users)
        exclude = self.users if exclude_users else ()
        return sample_private_set(self.network, pcfg, candidate_seed(c.seed, lam, run), exclude=exclude)

    def view(self, private: np.ndarray) -> PrivacyView:
        return PrivacyView(self.network, private, self.config.edge_visibility)


def build_context(config: SweepConfig) -> SweepContext:
    net = load_edges(config.edges)
    ctx = SweepContext(config, net)
    full = ctx.view(np.empty(0, dtype=np.int64))
    ctx.baseline_authority = ctx.authority(full)
    if not ctx.baseline_authority.converged:
        logger.warning("baseline PageRank did not converge (residual %.3g)", ctx.baseline_authority.residual)
    if any(e in SEARCH_EXPERIMENTS for e in config.experiments):
        corpus = load_publications(config.publications)
        ctx.tasks = load_tasks(config.tasks)
        index = content_index(corpus)
        ctx.content = [[content_facet(index.score_vector(q, net.ids)) for q in t.queries] for t in ctx.tasks]
        ctx.relevant = [relevant_positions(net, t.relevant) for t in ctx.tasks]
        ctx.users = net.index_of([t.user_id for t in ctx.tasks], strict=False)
        for exp in ("global_search", "local_search", "user_privacy"):
            if exp not in config.experiments:
                continue
            default = config.global_weights if exp == "global_search" else config.local_weights
            pinned = {"w_l": 0.0} if exp == "global_search" else {"w_g": 0.0}
            ctx.weights[exp] = tune_weights(ctx, pinned) if config.tune else default
    return ctx


def tune_weights(ctx: SweepContext, pinned: dict[str, float]) -> tuple[float, float, float]:
    """Weight vector maximising the mean per-task MAP on the full network.

    Ties go to the lexicographically smallest vector.
    """
    pts = WeightGrid(ctx.config.grid_step, pinned).points()
    full = ctx.view(np.empty(0, dtype=np.int64))
    s_g = authority_facet(ctx.baseline_authority)
    total = np.zeros(pts.shape[0])
    for t, task in enumerate(ctx.tasks):
        s_l = local_facet(local_similarity_vector(full, task.user_connections, ctx.config.local_sim))
        rel_pos, n_rel = ctx.relevant[t]
        per_query = [ap_over_grid(s_c, s_g, s_l, rel_pos, n_rel, pts) for s_c in ctx.content[t]]
        total += np.mean(per_query, axis=0)
    best = pts[argmax_lexicographic(total / len(ctx.tasks), pts)]
    return tuple(float(x) for x in best)


# ---------------------------------------------------------------------------
# Cells
# ---------------------------------------------------------------------------

def _task_rows(exp, lam, pb, pc, run, prefix, tasks, maps) -> list[ResultRow]:
    rows = [ResultRow(exp, lam, pb, pc, run, prefix, float(np.mean(maps)))]
    rows += [ResultRow(exp, lam, pb, pc, run, f"{prefix}:{t.task_id}", float(v)) for t, v in zip(tasks, maps)]
    return rows


def baseline_rows(ctx: SweepContext, experiment: str) -> list[ResultRow]:
    if experiment == "global_mae":
        return []
    full = ctx.view(np.empty(0, dtype=np.int64))
    w = ctx.weights[experiment]
    oracle = [t.user_connections for t in ctx.tasks]
    if experiment == "user_privacy":
        rows = _task_rows(experiment, None, None, None, None, "full_social_map", ctx.tasks,
                          ctx.task_maps(full, w, oracle, ctx.baseline_authority))
        rows += _task_rows(experiment, None, None, None, None, "no_social_map", ctx.tasks,
                           ctx.task_maps(full, w, None, ctx.baseline_authority))
    else:
        rows = _task_rows(experiment, None, None, None, None, "baseline_map", ctx.tasks,
                          ctx.task_maps(full, w, oracle, ctx.baseline_authority))
    rows += [ResultRow(experiment, None, None, None, None, f"weight_{k}", v) for k, v in zip(("w_c", "w_g", "w_l"), w)]
    return rows


def run_cell(ctx: SweepContext, job: tuple) -> list[ResultRow]:
    exp = job[0]
    if exp == "user_privacy":
        _, pc, run = job
        full = ctx.view(np.empty(0, dtype=np.int64))
        conns = [mask_user_connections(t.user_connections, pc, user_seed(ctx.config.seed, i, run))
                 for i, t in enumerate(ctx.tasks)]
        maps = ctx.task_maps(full, ctx.weights[exp], conns, ctx.baseline_authority)
        return _task_rows(exp, None, None, pc, run, "map", ctx.tasks, maps)
    _, lam, pb, run = job
    exclude = ctx.config.exclude_querying_users and exp != "global_mae"
    view = ctx.view(ctx.private_set(lam, pb, run, exclude))
    w = ctx.weights.get(exp)
    need_pr = exp in ("global_mae", "global_search") or (w is not None and w[1] != 0)
    authority = ctx.authority(view) if need_pr else None
    if exp == "global_mae":
        return [ResultRow(exp, lam, pb, None, run, "mae", mae(ctx.baseline_authority, authority))]
    oracle = [t.user_connections for t in ctx.tasks]
    maps = ctx.task_maps(view, w, oracle, authority)
    return _task_rows(exp, lam, pb, None, run, "map", ctx.tasks, maps)


def cell_jobs(config: SweepConfig) -> list[tuple]:
    jobs = []
    for exp in config.experiments:
        if exp == "user_privacy":
            jobs += [(exp, pc, r) for pc in config.pcs for r in range(config.runs)]
        else:
            jobs += [(exp, lam, pb, r) for lam in config.lambdas_for(exp) for pb in config.pbs
                     for r in range(config.runs)]
    return jobs


def _describe(job: tuple) -> str:
    if job[0] == "user_privacy":
        return f"experiment={job[0]} pc={job[1]} run={job[2]}"
    return f"experiment={job[0]} lambda={job[1]} pb={job[2]} run={job[3]}"


_WORKER_CTX: SweepContext | None = None


def _worker_run(job: tuple) -> list[ResultRow]:
    try:
        return run_cell(_WORKER_CTX, job)
    except Exception as exc:
        raise SweepError(f"cell failed ({_describe(job)}): {type(exc).__name__}: {exc}") from None


def run_experiment(config: SweepConfig, context: SweepContext | None = None) -> list[ResultRow]:
    """Run every cell of the sweep and return rows in canonical order.

    Canonical order: experiments as configured; within each, baseline rows,
    then cells in (lambda, p_b, run) or (p_c, run) order, independent of
    worker scheduling.
    """
    global _WORKER_CTX
    ctx = context if context is not None else build_context(config)
    jobs = cell_jobs(config)
    _WORKER_CTX = ctx
    try:
        if config.workers == 1:
            results = [_worker_run(j) for j in jobs]
        else:
            mp = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=config.workers, mp_context=mp) as pool:
                results = list(pool.map(_worker_run, jobs, chunksize=1))
    finally:
        _WORKER_CTX = None
    by_exp: dict[str, list[ResultRow]] = {e: [] for e in config.experiments}
    for job, rows in zip(jobs, results):
        by_exp[job[0]].extend(rows)
    out = []
    for exp in config.experiments:
        out += baseline_rows(ctx, exp)
        out += by_exp[exp]
    return out
