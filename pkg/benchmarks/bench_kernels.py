"""Timing comparison between the numba kernels and the numpy fallbacks.

Usage:
    python3 benchmarks/bench_kernels.py [--rows N] [--repeats K]

Runs each hot kernel on identical random inputs through both backends and
prints the best-of-K wall time plus the speedup. If numba is unavailable
(or CSXML_BACKEND=numpy is set), both columns time the same fallback code.
"""

import argparse
import time

import numpy as np

from csxml import kernels


def best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(rows, rng):
    codes = rng.integers(0, 256, rows).astype(np.int64)
    grad = rng.normal(size=rows)
    sums, counts, sq = kernels._bin_gradient_stats_np(codes, grad, 256)
    sorted_vals = np.sort(np.round(rng.normal(size=rows), 2))
    labels = rng.integers(0, 2, rows).astype(np.int64)
    targets = rng.normal(size=rows)
    return [
        ("bin_gradient_stats", kernels.bin_gradient_stats,
         kernels._bin_gradient_stats_np, (codes, grad, 256)),
        ("segment_updates", kernels.segment_updates,
         kernels._segment_updates_np, (sums, counts, sq, 3)),
        ("gini_split_scan", kernels.gini_split_scan,
         kernels._gini_split_scan_np, (sorted_vals, labels, 2)),
        ("variance_split_scan", kernels.variance_split_scan,
         kernels._variance_split_scan_np, (sorted_vals, targets)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=200_000,
                        help="input length per kernel call (default 200000)")
    parser.add_argument("--repeats", type=int, default=7,
                        help="take the best of this many runs (default 7)")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"active backend: {kernels.BACKEND}   rows: {args.rows}   "
          f"repeats: {args.repeats}")
    header = f"{'kernel':<22}{kernels.BACKEND + ' (ms)':>14}{'numpy (ms)':>14}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, fast, fallback, call_args in workloads(args.rows, rng):
        fast(*call_args)  # warm-up (numba compilation happens here)
        t_fast = best_of(fast, call_args, args.repeats)
        t_np = best_of(fallback, call_args, args.repeats)
        print(f"{name:<22}{1e3 * t_fast:>14.3f}{1e3 * t_np:>14.3f}"
              f"{t_np / t_fast:>9.2f}x")


if __name__ == "__main__":
    main()
