"""Time the compiled Gibbs kernel against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--points 6 50] [--sweeps 50] [--repeat 5]

Both kernels get identical whitened inputs and uniforms; the traces are
checked for equality before timing.
"""
from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from metric_bayes._kernels import gibbs_py

try:
    from metric_bayes._kernels import _gibbs
except ImportError:
    _gibbs = None


def make_inputs(n_points: int, n_sweeps: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    # one target-like point near the prediction plus uniform clutter, in whitened units
    zw = rng.uniform(-100.0, 100.0, size=(n_points, 2))
    zw[0] = rng.normal(0.0, 1.5, size=2)
    m0w = np.zeros(2)
    pw = np.diag([2.0, 2.0])
    alpha_t, alpha_c = 0.95, 0.25
    alpha = alpha_t + alpha_c
    log_wt = math.log(alpha_t / alpha)
    log_wc_dens = math.log(alpha_c / alpha) - math.log(200.0 * 200.0)
    init = np.arange(n_points, dtype=np.int64)
    uniforms = rng.random((n_sweeps, n_points))
    return zw, m0w, pw, log_wt, log_wc_dens, alpha, init, uniforms


def best_time(fn, args, repeat: int) -> float:
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.2:
        number *= 2
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, nargs="+", default=[6, 20, 50])
    ap.add_argument("--sweeps", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if _gibbs is None:
        print("compiled kernel not built; only the Python fallback is timed")
    print(f"{'points':>7}{'python (ms)':>14}{'cython (ms)':>14}{'speedup':>10}")
    for n in args.points:
        inputs = make_inputs(n, args.sweeps)
        t_py = best_time(gibbs_py.gibbs_sweeps, inputs, args.repeat)
        if _gibbs is None:
            print(f"{n:>7}{t_py * 1e3:>14.3f}{'-':>14}{'-':>10}")
            continue
        tr_py, lp_py = gibbs_py.gibbs_sweeps(*inputs)
        tr_cy, lp_cy = _gibbs.gibbs_sweeps(*inputs)
        if not (np.array_equal(tr_py, tr_cy) and np.array_equal(lp_py, lp_cy)):
            raise SystemExit(f"kernels disagree at {n} points")
        t_cy = best_time(_gibbs.gibbs_sweeps, inputs, args.repeat)
        print(f"{n:>7}{t_py * 1e3:>14.3f}{t_cy * 1e3:>14.3f}{t_py / t_cy:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
