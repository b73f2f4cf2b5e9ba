"""Time the hot kernels under both backends.

Each backend runs in its own interpreter because the choice is fixed at import:

    python benchmarks/bench_kernels.py            # both, side by side
    python benchmarks/bench_kernels.py --n 20000
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

CHILD = r"""
import json, sys, time
import numpy as np
from privsearch import BACKEND
from privsearch.evaluation import WeightGrid, ap_over_grid
from privsearch.features import pagerank
from privsearch.privacy_sim import PrivacyConfig, PrivacyView, candidate_seed, sample_private_set
from privsearch.synthgen import SynthSpec, ba_graph

n, repeat = int(sys.argv[1]), int(sys.argv[2])
net = ba_graph(SynthSpec(n=n, m=5, seed=1))
view = PrivacyView(net, sample_private_set(net, PrivacyConfig(1.0, 0.3), candidate_seed(0, 1.0, 0)))
g = np.random.default_rng(0)
sc, sg, sl = g.random(n), g.random(n), g.random(n)
rel = np.sort(g.choice(n, 5, replace=False)).astype(np.int64)
pts = WeightGrid(0.1).points()

def best(fn):
    fn()  # warm-up (numba compile or cache load)
    out = []
    for _ in range(repeat):
        t = time.perf_counter(); fn(); out.append(time.perf_counter() - t)
    return min(out)

print(json.dumps({
    "backend": BACKEND,
    "pagerank": best(lambda: pagerank(view)),
    "sample_private_set": best(lambda: sample_private_set(net, PrivacyConfig(1.0, 0.5), 7)),
    "ap_grid_1330": best(lambda: ap_over_grid(sc, sg, sl, rel, 5, pts)),
}))
"""


def run(backend: str, n: int, repeat: int) -> dict:
    env = dict(os.environ, PRIVSEARCH_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", CHILD, str(n), str(repeat)], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(out.stdout)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    t0 = time.perf_counter()
    res = {b: run(b, args.n, args.repeat) for b in ("numba", "numpy")}
    print(f"n = {args.n}, best of {args.repeat}")
    print(f"{'kernel':<22}{'numba (s)':>12}{'numpy (s)':>12}{'speed-up':>10}")
    for k in ("pagerank", "sample_private_set", "ap_grid_1330"):
        a, b = res["numba"][k], res["numpy"][k]
        print(f"{k:<22}{a:>12.4f}{b:>12.4f}{b / a:>9.1f}x")
    print(f"total wall time {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
