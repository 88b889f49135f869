#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Runs the two hot kernels (shot-noise splatting, marching-squares
perimeter) on representative workloads with both backends and prints a
speedup table. The compiled extension must be built for the comparison;
otherwise only the fallback is timed.

    python3 benchmarks/bench_kernels.py [--repeats 5] [--side 256]
"""

import argparse
import time

import numpy as np

from excursions import _kernels, _kernels_py


def time_fn(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_splat(side, repeats):
    rng = np.random.default_rng(0)
    spacing, width = 1.0, 0.5
    radius = width * np.sqrt(2 * np.log(1e10))
    n_points = int(side * side * 1.0)
    points = rng.random((n_points, 2)) * side - radius
    marks = rng.exponential(1.0, n_points)
    rows = []

    def compiled():
        field = np.zeros((side, side))
        _kernels._core.splat_points_2d(
            field, points, marks, spacing, width, radius, _kernels.KERNEL_GAUSSIAN_BUMP
        )
        return field

    def fallback():
        field = np.zeros((side, side))
        _kernels_py.splat_points(
            field, points, marks, spacing, width, radius, _kernels.KERNEL_GAUSSIAN_BUMP
        )
        return field

    if _kernels.COMPILED:
        # libc exp and numpy's vectorized exp may differ in the last ulp
        assert np.allclose(compiled(), fallback(), rtol=1e-12, atol=1e-13)
        rows.append(("splat 2d", time_fn(compiled, repeats), time_fn(fallback, repeats)))
    else:
        rows.append(("splat 2d", None, time_fn(fallback, repeats)))
    return rows


def bench_perimeter(side, repeats):
    rng = np.random.default_rng(1)
    values = np.ascontiguousarray(rng.normal(size=(side, side)))
    rows = []

    def compiled():
        return _kernels._core.perimeter_2d(values, 0.3, 1.0)

    def fallback():
        return _kernels_py.perimeter_2d(values, 0.3, 1.0)

    if _kernels.COMPILED:
        assert abs(compiled() - fallback()) < 1e-9 * abs(fallback())
        rows.append(
            ("perimeter 2d", time_fn(compiled, repeats), time_fn(fallback, repeats))
        )
    else:
        rows.append(("perimeter 2d", None, time_fn(fallback, repeats)))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--side", type=int, default=256)
    args = parser.parse_args()

    print(f"backend available: {_kernels.backend()}  (side={args.side})")
    rows = bench_splat(args.side, args.repeats) + bench_perimeter(
        args.side, args.repeats
    )
    print(f"{'kernel':<14} {'compiled':>12} {'numpy':>12} {'speedup':>9}")
    for name, fast, slow in rows:
        if fast is None:
            print(f"{name:<14} {'n/a':>12} {slow * 1e3:>10.2f}ms {'n/a':>9}")
        else:
            print(
                f"{name:<14} {fast * 1e3:>10.2f}ms {slow * 1e3:>10.2f}ms "
                f"{slow / fast:>8.1f}x"
            )


if __name__ == "__main__":
    main()
