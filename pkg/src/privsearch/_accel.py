"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import time from ``PRIVSEARCH_BACKEND``
(``numba`` or ``numpy``). ``numba`` is the default when the package imports;
a missing numba silently falls back to numpy. Both implementations of every
kernel are importable by name so they can be checked against each other.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    nb = None

_requested = os.environ.get("PRIVSEARCH_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"PRIVSEARCH_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

BACKEND = "numba" if (_requested == "numba" and nb is not None) else "numpy"


def _identity(fn):
    return fn


njit = nb.njit(cache=True, nogil=True) if nb is not None else _identity


# ---------------------------------------------------------------------------
# PageRank power iteration
# ---------------------------------------------------------------------------

def _pagerank_numpy(indptr, indices, n, damping, tol, max_iter):
    deg = np.diff(indptr).astype(np.float64)
    dangling = deg == 0
    safe_deg = np.where(dangling, 1.0, deg)
    rows = np.repeat(np.arange(n), np.diff(indptr))
    x = np.full(n, 1.0 / n)
    residual = np.inf
    it = 0
    while it < max_iter:
        contrib = x / safe_deg
        pulled = np.bincount(rows, weights=contrib[indices], minlength=n)
        dmass = x[dangling].sum()
        new = damping * (pulled + dmass / n) + (1.0 - damping) / n
        residual = np.abs(new - x).sum()
        x = new
        it += 1
        if residual < tol:
            break
    return x, residual, it


@njit
def _pagerank_numba(indptr, indices, n, damping, tol, max_iter):
    deg = np.empty(n, dtype=np.float64)
    for i in range(n):
        deg[i] = indptr[i + 1] - indptr[i]
    x = np.full(n, 1.0 / n)
    new = np.empty(n, dtype=np.float64)
    contrib = np.empty(n, dtype=np.float64)
    residual = np.inf
    it = 0
    while it < max_iter:
        dmass = 0.0
        for i in range(n):
            if deg[i] == 0.0:
                dmass += x[i]
                contrib[i] = 0.0
            else:
                contrib[i] = x[i] / deg[i]
        base = damping * dmass / n + (1.0 - damping) / n
        residual = 0.0
        for i in range(n):
            acc = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                acc += contrib[indices[k]]
            v = damping * acc + base
            residual += abs(v - x[i])
            new[i] = v
        x, new = new, x
        it += 1
        if residual < tol:
            break
    return x, residual, it


# ---------------------------------------------------------------------------
# Sequential weighted sampling without replacement
# ---------------------------------------------------------------------------
# A complete binary sum-tree over the weights. Each draw scales a pre-drawn
# uniform by the current total, descends to a leaf, then zeroes that leaf and
# recomputes its ancestors from their children, so totals never drift.

def _draw_order_numpy(weights, uniforms):
    n = weights.shape[0]
    k = uniforms.shape[0]
    size = 1
    while size < n:
        size *= 2
    tree = np.zeros(2 * size, dtype=np.float64)
    tree[size:size + n] = weights
    for i in range(size - 1, 0, -1):
        tree[i] = tree[2 * i] + tree[2 * i + 1]
    out = np.empty(k, dtype=np.int64)
    for d in range(k):
        r = uniforms[d] * tree[1]
        node = 1
        while node < size:
            left = 2 * node
            if (r < tree[left] or tree[left + 1] == 0.0) and tree[left] > 0.0:
                node = left
            else:
                r -= tree[left]
                node = left + 1
        leaf = node - size
        out[d] = leaf
        tree[node] = 0.0
        node //= 2
        while node >= 1:
            tree[node] = tree[2 * node] + tree[2 * node + 1]
            node //= 2
    return out


_draw_order_numba = njit(_draw_order_numpy)


# ---------------------------------------------------------------------------
# Common-neighbour counts for the local facet
# ---------------------------------------------------------------------------

def _common_counts_numpy(indptr, indices, sources, n):
    if sources.shape[0] == 0:
        return np.zeros(n, dtype=np.int64)
    spans = [indices[indptr[s]:indptr[s + 1]] for s in sources]
    return np.bincount(np.concatenate(spans), minlength=n).astype(np.int64)


@njit
def _common_counts_numba(indptr, indices, sources, n):
    out = np.zeros(n, dtype=np.int64)
    for s in sources:
        for k in range(indptr[s], indptr[s + 1]):
            out[indices[k]] += 1
    return out


# ---------------------------------------------------------------------------
# Average precision of a weighted facet sum, over a grid of weight vectors
# ---------------------------------------------------------------------------
# rank(j) = 1 + #{i : s_i > s_j} + #{i < j : s_i == s_j}, which is the position
# of j after sorting by score descending with ties broken by ascending index.

def _ap_grid_numpy(sc, sg, sl, relevant, n_relevant, grid):
    g = grid.shape[0]
    out = np.zeros(g, dtype=np.float64)
    if relevant.shape[0] == 0:
        return out
    idx = np.arange(sc.shape[0])
    for p in range(g):
        wc, wg, wl = grid[p, 0], grid[p, 1], grid[p, 2]
        s = wc * sc + wg * sg + wl * sl
        ranks = np.empty(relevant.shape[0], dtype=np.int64)
        for t, j in enumerate(relevant):
            sj = s[j]
            ranks[t] = 1 + np.count_nonzero(s > sj) + np.count_nonzero((s == sj) & (idx < j))
        ranks.sort()
        out[p] = (np.arange(1, ranks.shape[0] + 1) / ranks).sum() / n_relevant
    return out


@njit
def _ap_grid_numba(sc, sg, sl, relevant, n_relevant, grid):
    g = grid.shape[0]
    n = sc.shape[0]
    r = relevant.shape[0]
    out = np.zeros(g, dtype=np.float64)
    if r == 0:
        return out
    s = np.empty(n, dtype=np.float64)
    ranks = np.empty(r, dtype=np.int64)
    for p in range(g):
        wc, wg, wl = grid[p, 0], grid[p, 1], grid[p, 2]
        for i in range(n):
            s[i] = wc * sc[i] + wg * sg[i] + wl * sl[i]
        for t in range(r):
            j = relevant[t]
            sj = s[j]
            c = 1
            for i in range(n):
                si = s[i]
                if si > sj or (si == sj and i < j):
                    c += 1
            ranks[t] = c
        ranks.sort()
        acc = 0.0
        for t in range(r):
            acc += (t + 1) / ranks[t]
        out[p] = acc / n_relevant
    return out


if BACKEND == "numba":
    pagerank_kernel = _pagerank_numba
    draw_order_kernel = _draw_order_numba
    common_counts_kernel = _common_counts_numba
    ap_grid_kernel = _ap_grid_numba
else:
    pagerank_kernel = _pagerank_numpy
    draw_order_kernel = _draw_order_numpy
    common_counts_kernel = _common_counts_numpy
    ap_grid_kernel = _ap_grid_numpy
