"""Compare the compiled core with the NumPy fallback on the two hot kernels.

    python3 benchmarks/bench_backends.py [--repeat 5] [--threads 1 4]

Prints the best-of-``repeat`` wall time per kernel and backend, and checks
that both backends return the same numbers.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mfrac import _backend
from mfrac.exponents import ExponentConfig
from mfrac.operators import kernel_table


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def range_max_case(rng, rows=2048, cols=1024):
    values = rng.random((rows, cols))
    lo = np.sort(rng.integers(0, cols, size=cols))
    hi = np.minimum(lo + rng.integers(0, 64, size=cols), cols - 1)
    hi = np.maximum.accumulate(hi)
    return values, lo, hi


def mfi_case(rng, level=6, m=2):
    cfg = ExponentConfig(1, m, (2.0,) * m, 2, 0.5, k=1)
    size = 1 << level
    table = kernel_table(cfg, level)
    funcs = rng.random((m, size))
    coords = np.arange(size, dtype=np.int64).reshape(-1, 1)
    return funcs, table, coords, size


def strong_mfi_case(rng, level=4, m=2):
    cfg = ExponentConfig(1, m, (2.0,) * m, 2, (0.5, 0.5), k=2)
    size = 1 << level
    table = kernel_table(cfg, level)
    funcs = rng.random((m, size * size))
    coords = np.indices((size, size)).reshape(2, -1).T.astype(np.int64)
    return funcs, table, coords, size


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--threads", type=int, nargs="+", default=[1, 4])
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = ["python"] + (["cython"] if _backend.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled core not built; timing the fallback only")

    rm = range_max_case(rng)
    cases = [("mfi m=2 n=1 L=6", mfi_case(rng), 1), ("strong mfi m=2 k=2 L=4",
                                                     strong_mfi_case(rng), 2)]
    print(f"{'kernel':28s} {'backend':8s} {'threads':>7s} {'best [ms]':>10s} {'speedup':>8s}")
    ref_time, ref = best_time(lambda: _backend.kernels("python")[0](*rm), args.repeat)
    print(f"{'range_max 2048x1024':28s} {'python':8s} {'-':>7s} {ref_time * 1e3:10.2f} {1.0:8.1f}")
    if "cython" in backends:
        t, out = best_time(lambda: _backend.kernels("cython")[0](*rm), args.repeat)
        assert np.array_equal(out, ref)
        print(f"{'range_max 2048x1024':28s} {'cython':8s} {'-':>7s} {t * 1e3:10.2f} "
              f"{ref_time / t:8.1f}")
    for label, (funcs, table, coords, size), dim in cases:
        py = _backend.kernels("python")[1]
        ref_time, ref = best_time(lambda: py(funcs, table, coords, size, dim), args.repeat)
        print(f"{label:28s} {'python':8s} {'-':>7s} {ref_time * 1e3:10.2f} {1.0:8.1f}")
        if "cython" not in backends:
            continue
        for threads in args.threads:
            _backend.set_threads(threads)
            cy = _backend.kernels("cython")[1]
            t, out = best_time(lambda: cy(funcs, table, coords, size, dim), args.repeat)
            assert np.allclose(out, ref, rtol=1e-12, atol=0)
            print(f"{label:28s} {'cython':8s} {threads:7d} {t * 1e3:10.2f} {ref_time / t:8.1f}")
    _backend.set_threads(1)


if __name__ == "__main__":
    main()
