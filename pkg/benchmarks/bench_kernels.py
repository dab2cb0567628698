#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy twins.

Usage: python benchmarks/bench_kernels.py [--repeat 5]

The active backend for library calls is chosen by SIFTSHADOW_NUMBA; this
script imports both modules directly and times them side by side, so it
reports the tradeoff regardless of the flag.
"""

import argparse
import time

import numpy as np

from siftshadow import _kernels_numba as knb
from siftshadow import _kernels_numpy as knp
from siftshadow._accel import USING_NUMBA
from siftshadow.maps import bm_matrices


def timeit(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    values = rng.uniform(-1, 1, size=1_000_000) + 0.6
    pts = rng.random(10_001)
    mask = np.ones(10_001, dtype=bool)
    S0, S1 = bm_matrices(2.0, 2.0)
    syms = rng.integers(0, 2, size=1 << 14).astype(np.int64)
    params = np.array([0.05])

    cases = [
        ("pliss_prefix_flags (1e6)", lambda k: k.pliss_prefix_flags(values, 0.25)),
        # lam low enough that the scan cannot exit early
        ("quasi_expanding (1e6)", lambda k: k.quasi_expanding(values, -0.5)),
        ("orbit_circle perturbed (1e5)", lambda k: k.orbit_circle(1, params, 0.3, 100_000)),
        ("best_pairs_per_period (1e4)", lambda k: k.best_pairs_per_period(pts, mask, 1e-3, 3)),
        ("cocycle windows (16k x 16)", lambda k: k.cocycle_window_logconorms(syms, S0, S1, 16, 1024)),
        ("well_adapted_log (1e6)", lambda k: k.well_adapted_log(values)),
    ]

    print(f"library backend selected by env: {'numba' if USING_NUMBA else 'numpy'}")
    print(f"{'kernel':<32}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, call in cases:
        call(knb)  # JIT warmup
        t_nb = timeit(lambda: call(knb), args.repeat)
        t_np = timeit(lambda: call(knp), args.repeat)
        print(f"{name:<32}{t_nb * 1e3:>10.2f}ms{t_np * 1e3:>10.2f}ms{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
