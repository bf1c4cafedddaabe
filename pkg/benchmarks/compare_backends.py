#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run:  python benchmarks/compare_backends.py [--repeats N]

Each kernel is warmed once (numba pays JIT compilation there), then timed
over the best of N repeats on identical inputs.
"""

import argparse
import time

import numpy as np

from wavechaos.backend import kernels


def best_of(fn, repeats):
    fn()  # warm-up / JIT
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def build_cases(rng):
    img = rng.normal(size=(512, 512))
    lo9, hi7 = rng.normal(size=9), rng.normal(size=7)
    lo7, hi9 = rng.normal(size=7), rng.normal(size=9)
    a = rng.normal(size=(512, 256))
    d = rng.normal(size=(512, 256))
    z0 = np.array([0.1, 0.1, 0.1])
    x = rng.normal(size=(16, 128, 128, 4))
    w = rng.normal(size=(3, 3, 4, 8))
    b = rng.normal(size=8)
    pool_in = rng.normal(size=(16, 128, 128, 8))
    return {
        "dwt_rows_fwd (512x512)": lambda k: k.dwt_rows_fwd(img, lo9, hi7),
        "dwt_rows_inv (512x512)": lambda k: k.dwt_rows_inv(a, d, lo7, hi9),
        "chua_rk4 (1e6 steps)": lambda k: k.chua_rk4(
            z0, 10.814, 14.0, 1.3, 0.11, 7.0, 0.0, 0.005, 0, 1_000_000, 1, 1e3
        ),
        "conv2d_fwd (16x128x128x4->8)": lambda k: k.conv2d_fwd(x, w, b),
        "conv2d_bwd (same)": lambda k: k.conv2d_bwd(x, w, k.conv2d_fwd(x, w, b)),
        "maxpool2x2 fwd (16x128x128x8)": lambda k: k.maxpool2x2_fwd(pool_in),
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    cases = build_cases(rng)
    backends = {}
    for name in ("numpy", "numba"):
        try:
            backends[name] = kernels(name)
        except ImportError:
            print(f"backend {name} unavailable, skipping")
    header = f"{'kernel':<32}" + "".join(f"{n:>12}" for n in backends) + f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, call in cases.items():
        row = f"{label:<32}"
        times = {}
        for name, mod in backends.items():
            times[name] = best_of(lambda: call(mod), args.repeats)
            row += f"{times[name] * 1e3:>10.2f}ms"
        if len(times) == 2:
            row += f"{times['numpy'] / times['numba']:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
