"""Compare the compiled and numpy root kernels.

Usage: ``python benchmarks/bench_kernels.py [--nodes N] [--repeat R]``

Times two workloads for each available backend: many single-polynomial
calls (the per-point solver path) and one batched sweep of rk4
learnability polynomials over a square grid (the field path).
"""
import argparse
import time

import numpy as np

from rklearn import roots
from rklearn.butcher import builtin
from rklearn.grid import Region, _sweep_chunk
from rklearn.learnability import learnability_polynomial, safe_exp
from rklearn.stability import stability_function


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def rk4_batch(n):
    z = Region(-6, 2, -6, 6, n, n).nodes().ravel()
    R = stability_function(builtin("rk4"))
    P = np.stack([learnability_polynomial(R, safe_exp(v)) for v in z])
    return P, np.full(z.size, 4)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=300, help="grid side for the batch workload")
    ap.add_argument("--singles", type=int, default=2000, help="number of single solves")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = ["python"] + (["cython"] if roots.BACKEND == "cython" else [])
    P, deg = rk4_batch(args.nodes)
    singles = P[: args.singles]
    print(f"default backend: {roots.BACKEND}")
    print(f"{'backend':<8} {'single (us/call)':>17} {'batch ' + str(P.shape[0]) + ' (s)':>18} "
          f"{'batch (us/poly)':>16}")
    results = {}
    for b in backends:
        def run_singles():
            for row in singles:
                roots.aberth_batch(row[None], [4], backend=b)

        def run_batch():
            roots.aberth_batch(P, deg, backend=b)

        ts = best_of(run_singles, args.repeat) / len(singles)
        tb = best_of(run_batch, args.repeat)
        results[b] = (ts, tb)
        print(f"{b:<8} {ts * 1e6:>17.1f} {tb:>18.3f} {tb / P.shape[0] * 1e6:>16.2f}")
    if len(results) == 2:
        (ps, pb), (cs, cb) = results["python"], results["cython"]
        print(f"speedup  {ps / cs:>17.1f}x {pb / cb:>17.1f}x")
        a = roots.aberth_batch(P, deg, backend="python")[0]
        c = roots.aberth_batch(P, deg, backend="cython")[0]
        print(f"max |root difference| between backends: {np.nanmax(np.abs(a - c)):.2e}")

    # end-to-end field sweep chunk, which adds residual and pole checks
    R = stability_function(builtin("rk4"))
    z = Region(-6, 2, -6, 6, args.nodes, args.nodes).nodes().ravel()
    t = best_of(lambda: _sweep_chunk(R, z), args.repeat)
    print(f"sweep chunk ({z.size} nodes, default backend): {t:.3f}s")


if __name__ == "__main__":
    main()
