#!/usr/bin/env python3
"""Benchmark the JIT kernels against the pure-numpy fallback.

Times the three hot paths (seminorm batches, bounded-metric batches, and
path-optimized pseudometrics) under both backends and prints the speedup.
Run as ``python benchmarks/bench_kernels.py [--repeats N]``.
"""

import argparse
import time

import numpy as np

from gradedmin.backends import load_backend


def _quad(order=8):
    t, w = np.polynomial.legendre.leggauss(order)
    return (t + 1) / 2, w / 2


def bench(fn, repeats):
    fn()  # warm (JIT compile / cache load)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = {name: load_backend(name) for name in ("numba", "numpy")}
    rng = np.random.default_rng(0)
    W = np.array([[1.0, 2.0, 3.0], [1.0, 4.0, 9.0], [1.0, 8.0, 27.0]])
    X = rng.standard_normal((200_000, 3))
    y = np.zeros(3)
    qx, qw = _quad()
    Y_small = rng.uniform(-2, 2, (64, 3))

    cases = {
        "seminorm_table (200k x D=3, N=3)":
            lambda mod: mod.seminorm_table(W, 0, X),
        "graded_metric_batch (200k)":
            lambda mod: mod.graded_metric_batch(W, 0, X, y),
        "pseudometric_batch (64 pairs, conformal, 17 nodes)":
            lambda mod: mod.pseudometric_batch(W, 0, y, Y_small, 17, 3, 25,
                                               qx, qw, 1, 1.0, 1.0),
    }

    width = max(len(k) for k in cases)
    print(f"{'case'.ljust(width)}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name, case in cases.items():
        times = {bname: bench(lambda m=mod: case(m), args.repeats)
                 for bname, mod in backends.items()}
        speedup = times["numpy"] / times["numba"]
        print(f"{name.ljust(width)}  {times['numba'] * 1e3:9.2f}ms  "
              f"{times['numpy'] * 1e3:9.2f}ms  {speedup:7.1f}x")

    a = backends["numba"].pseudometric_batch(W, 0, y, Y_small, 17, 3, 25,
                                             qx, qw, 1, 1.0, 1.0)
    b = backends["numpy"].pseudometric_batch(W, 0, y, Y_small, 17, 3, 25,
                                             qx, qw, 1, 1.0, 1.0)
    print(f"\nbackend agreement (max abs diff): {np.max(np.abs(a - b)):.2e}")


if __name__ == "__main__":
    main()
