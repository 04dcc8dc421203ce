"""Compare the numba kernels with their numpy fallbacks.

Run with ``python benchmarks/bench_kernels.py``. Kernel timings call both
backends in-process. Whole-forest training runs in a subprocess per backend
because the backend is fixed at import time by ``HMLRF_DISABLE_NUMBA``.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from hmlrf import _accel
from hmlrf._kernels import best_split, coleaf_counts


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_split(rng, n, f, t, repeat):
    Xs = rng.normal(size=(n, f)).round(3)
    wp = (rng.random((n, t)) < 0.4).astype(float)
    wn = 1.0 - wp
    tp, tn = wp.sum(0), wn.sum(0)
    out = {}
    for name, flag in (("numba", True), ("numpy", False)):
        if flag and not _accel.HAVE_NUMBA:
            continue
        best_split(Xs, wp, wn, tp, tn, use_numba=flag)  # warm-up / compile
        out[name] = best_of(lambda: best_split(Xs, wp, wn, tp, tn, use_numba=flag), repeat)
    return out


def bench_coleaf(rng, tau, n, leaves, repeat):
    ids = rng.integers(0, leaves, size=(tau, n))
    out = {}
    for name, flag in (("numba", True), ("numpy", False)):
        if flag and not _accel.HAVE_NUMBA:
            continue
        coleaf_counts(ids[:1], use_numba=flag)
        out[name] = best_of(lambda: coleaf_counts(ids, use_numba=flag), repeat)
    return out


FOREST_SNIPPET = """
import time
from hmlrf import ForestConfig, make_planted, train_forest
ds = make_planted(seed=0)
train_forest(ds, ForestConfig(tau=2), seed=0)
start = time.perf_counter()
train_forest(ds, ForestConfig(tau={tau}), seed=0)
print(time.perf_counter() - start)
"""


def bench_forest(tau):
    out = {}
    for name, disable in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, HMLRF_DISABLE_NUMBA=disable)
        res = subprocess.run([sys.executable, "-c", FOREST_SNIPPET.format(tau=tau)],
                             env=env, capture_output=True, text=True, check=True)
        out[name] = float(res.stdout.strip().splitlines()[-1])
    return out


def show(label, timings):
    cells = "  ".join(f"{k}={v * 1e3:9.3f} ms" for k, v in timings.items())
    ratio = ""
    if "numba" in timings and "numpy" in timings:
        ratio = f"  speedup x{timings['numpy'] / timings['numba']:.1f}"
    print(f"{label:<38}{cells}{ratio}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--tau", type=int, default=50, help="trees for the forest benchmark")
    ap.add_argument("--skip-forest", action="store_true")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"numba available: {_accel.HAVE_NUMBA}")
    for n, f, t in ((8, 3, 4), (400, 3, 4), (400, 3, 12), (5000, 10, 12)):
        show(f"best_split n={n} feats={f} tags={t}", bench_split(rng, n, f, t, args.repeat))
    for tau, n, leaves in ((100, 400, 60), (1000, 400, 100)):
        show(f"coleaf_counts tau={tau} n={n}", bench_coleaf(rng, tau, n, leaves, args.repeat))
    if not args.skip_forest:
        show(f"train_forest planted tau={args.tau}", bench_forest(args.tau))


if __name__ == "__main__":
    main()
