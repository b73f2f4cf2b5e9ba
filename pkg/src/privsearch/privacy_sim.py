"""Privacy models: degree-biased hiding of candidates and masking of a user's own connections."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from ._accel import draw_order_kernel
from .graph_store import Network

EDGE_VISIBILITY = ("both_public", "either_public")


def round_half_up(x: float) -> int:
    # x is a product like N * p_b; nudge off binary representation error (0.25*10 is fine, 0.3*10 is 3.0000000000000004)
    return int(math.floor(x + 0.5 + 1e-9))


@dataclass(frozen=True)
class PrivacyConfig:
    lam: float = 0.0
    p_b: float = 0.0
    p_c: float = 1.0
    runs: int = 10
    master_seed: int = 0
    edge_visibility: str = "both_public"
    exclude_querying_users: bool = True

    def __post_init__(self):
        if not 0.0 <= self.p_b <= 1.0:
            raise ValueError(f"p_b must be in [0, 1], got {self.p_b}")
        if not 0.0 <= self.p_c <= 1.0:
            raise ValueError(f"p_c must be in [0, 1], got {self.p_c}")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if self.edge_visibility not in EDGE_VISIBILITY:
            raise ValueError(f"edge_visibility must be one of {EDGE_VISIBILITY}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")


# Stream tags keep candidate sampling and connection masking on disjoint seed streams.
CANDIDATE_STREAM = 0
USER_STREAM = 1


def lambda_key(lam: float) -> int:
    """Stable non-negative integer key for a lambda value (milli-units, offset)."""
    return int(round(lam * 1000)) + 1_000_000


def derive_seed(master_seed: int, *coords: int) -> np.random.SeedSequence:
    """Seed for one run of one cell, a pure function of its coordinates.

    Coordinates must be non-negative integers. Execution order never enters, so
    a sweep produces the same draws on any number of workers.
    """
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(c) for c in coords))


def candidate_seed(master_seed: int, lam: float, run: int) -> np.random.SeedSequence:
    # p_b is deliberately absent: run r of every p_b cell under one lambda shares its stream
    return derive_seed(master_seed, CANDIDATE_STREAM, lambda_key(lam), run)


def user_seed(master_seed: int, task_index: int, run: int) -> np.random.SeedSequence:
    return derive_seed(master_seed, USER_STREAM, task_index, run)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def privacy_weights(network: Network, lam: float) -> np.ndarray:
    """Per-node privacy propensity ``(d_i / d_max) ** lam`` (unnormalised).

    Zero-degree nodes get the weight of degree 1 when ``lam < 0``; with
    ``lam == 0`` every node weighs 1.
    """
    d_max = network.d_max
    if d_max <= 0:
        raise ValueError("privacy weights need at least one edge (d_max > 0)")
    deg = network.degree.astype(np.float64)
    if lam == 0:
        return np.ones_like(deg)
    if lam < 0:
        deg = np.where(deg == 0, 1.0, deg)
    return (deg / d_max) ** lam


def sample_size(n: int, p: float) -> int:
    return round_half_up(n * p)


def draw_order(weights: np.ndarray, k: int, seed) -> np.ndarray:
    """Indices of ``k`` sequential weighted draws without replacement, in draw order.

    Each draw picks among the remaining items with probability proportional to
    their weight; the picked item is then removed.
    """
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite and non-negative")
    if k > np.count_nonzero(weights):
        raise ValueError(f"cannot draw {k} items: only {np.count_nonzero(weights)} have positive weight")
    if k == 0:
        return np.empty(0, dtype=np.int64)
    uniforms = _rng(seed).random(k)
    return draw_order_kernel(weights, uniforms)


def sample_private_set(
    network: Network,
    config: PrivacyConfig,
    run_seed,
    exclude: Sequence[int] = (),
) -> np.ndarray:
    """Sample the privacy-concerned set U; returns sorted dense node indices.

    ``|U| = round(N * p_b)``. Nodes in ``exclude`` (querying users, when the
    config asks for it) get zero weight, and the sample size is capped at the
    number of remaining nodes.
    """
    k = sample_size(network.n_nodes, config.p_b)
    if k == 0:
        return np.empty(0, dtype=np.int64)
    w = privacy_weights(network, config.lam).copy()
    if len(exclude):
        w[np.asarray(exclude, dtype=np.int64)] = 0.0
        k = min(k, int(np.count_nonzero(w)))
    if not np.any(w > 0):
        raise ValueError("all privacy weights are zero; cannot sample")
    return np.sort(draw_order(w, k, run_seed))


class PrivacyView:
    """Read-only view of a network with the edges of private nodes hidden.

    With ``both_public`` (default) an edge stays visible only if neither
    endpoint is private; ``either_public`` keeps it unless both are.
    """

    def __init__(self, base: Network, private: Iterable[int] = (), edge_visibility: str = "both_public"):
        if edge_visibility not in EDGE_VISIBILITY:
            raise ValueError(f"edge_visibility must be one of {EDGE_VISIBILITY}")
        priv = np.unique(np.asarray(list(private) if not isinstance(private, np.ndarray) else private,
                                    dtype=np.int64))
        if priv.size and (priv[0] < 0 or priv[-1] >= base.n_nodes):
            raise ValueError("private set contains indices outside the network")
        self.base = base
        self.private = priv
        self.edge_visibility = edge_visibility
        mask = np.zeros(base.n_nodes, dtype=bool)
        mask[priv] = True
        mask.setflags(write=False)
        self.private_mask = mask

    @property
    def n_nodes(self) -> int:
        return self.base.n_nodes

    @property
    def ids(self) -> tuple[str, ...]:
        return self.base.ids

    @cached_property
    def _csr(self) -> tuple[np.ndarray, np.ndarray]:
        b = self.base
        if not self.private.size:
            return b.indptr, b.indices
        src = np.repeat(np.arange(b.n_nodes), b.degree)
        hid_src = self.private_mask[src]
        hid_dst = self.private_mask[b.indices]
        if self.edge_visibility == "both_public":
            keep = ~(hid_src | hid_dst)
        else:
            keep = ~(hid_src & hid_dst)
        counts = np.bincount(src[keep], minlength=b.n_nodes)
        indptr = np.zeros(b.n_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = np.ascontiguousarray(b.indices[keep])
        indptr.setflags(write=False)
        indices.setflags(write=False)
        return indptr, indices

    @property
    def indptr(self) -> np.ndarray:
        return self._csr[0]

    @property
    def indices(self) -> np.ndarray:
        return self._csr[1]

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def n_edges(self) -> int:
        return int(self.indices.shape[0] // 2)

    def neighbors(self, i: int) -> np.ndarray:
        ip, ix = self._csr
        return ix[ip[i]:ip[i + 1]]

    def is_visible(self, a: int, b: int) -> bool:
        return bool(np.any(self.neighbors(a) == b))

    def private_ids(self) -> frozenset[str]:
        return frozenset(self.base.ids[i] for i in self.private.tolist())


def apply_candidate_privacy(network: Network, private: Iterable[int], edge_visibility: str = "both_public") -> PrivacyView:
    return PrivacyView(network, private, edge_visibility)


def mask_user_connections(connections: Sequence, p_c: float, run_seed) -> list:
    """Keep a uniformly random ``round(p_c * len(connections))`` subset, in input order.

    The subset is the prefix of one seeded permutation, so for a fixed seed the
    retained set only grows with ``p_c``.
    """
    if not 0.0 <= p_c <= 1.0:
        raise ValueError(f"p_c must be in [0, 1], got {p_c}")
    conns = list(connections)
    k = sample_size(len(conns), p_c)
    if k >= len(conns):
        return conns
    perm = _rng(run_seed).permutation(len(conns))
    keep = np.sort(perm[:k])
    return [conns[i] for i in keep.tolist()]
