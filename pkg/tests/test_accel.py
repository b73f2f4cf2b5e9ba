import os
import subprocess
import sys

import numpy as np
import pytest

from privsearch import _accel
from privsearch.evaluation import WeightGrid
from privsearch.synthgen import SynthSpec, ba_graph


@pytest.fixture(scope="module")
def net():
    return ba_graph(SynthSpec(n=3000, m=3, seed=21))


def test_pagerank_backends_agree(net):
    args = (net.indptr, net.indices, net.n_nodes, 0.85, 1e-10, 200)
    x1, r1, it1 = _accel._pagerank_numpy(*args)
    x2, r2, it2 = _accel._pagerank_numba(*args)
    assert np.abs(x1 - x2).max() < 1e-14
    assert it1 == it2


def test_draw_order_backends_identical():
    g = np.random.default_rng(0)
    w = g.random(500) ** 3
    w[::7] = 0.0
    u = g.random(200)
    assert np.array_equal(_accel._draw_order_numpy(w.copy(), u), _accel._draw_order_numba(w.copy(), u))


def test_common_counts_backends_identical(net):
    src = np.array([0, 5, 17, 2999], dtype=np.int64)
    a = _accel._common_counts_numpy(net.indptr, net.indices, src, net.n_nodes)
    b = _accel._common_counts_numba(net.indptr, net.indices, src, net.n_nodes)
    assert np.array_equal(a, b)


def test_ap_grid_backends_agree():
    g = np.random.default_rng(5)
    n = 400
    sc, sg, sl = g.random(n), g.random(n), np.where(g.random(n) < 0.7, 0.0, g.random(n))
    sc[:50] = 0.0  # ties
    rel = np.sort(g.choice(n, 12, replace=False)).astype(np.int64)
    pts = WeightGrid(0.1).points()
    a = _accel._ap_grid_numpy(sc, sg, sl, rel, 14, pts)
    b = _accel._ap_grid_numba(sc, sg, sl, rel, 14, pts)
    assert np.abs(a - b).max() < 1e-12


def _backend_in_subprocess(value):
    env = dict(os.environ, PRIVSEARCH_BACKEND=value)
    return subprocess.run([sys.executable, "-c", "import privsearch; print(privsearch.BACKEND)"],
                          env=env, capture_output=True, text=True)


def test_environment_flag_selects_numpy():
    out = _backend_in_subprocess("numpy")
    assert out.returncode == 0 and out.stdout.strip() == "numpy"


def test_bad_environment_flag():
    out = _backend_in_subprocess("fortran")
    assert out.returncode != 0 and "PRIVSEARCH_BACKEND" in out.stderr
