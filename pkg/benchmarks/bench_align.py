#!/usr/bin/env python3
"""Benchmark the JIT and pure-numpy alignment kernels against each other.

Times the matrix fill on random protein pairs across a range of lengths,
verifies both paths produce bit-identical matrices, and reports pair
throughput. The numba path is what production runs use; the numpy
wavefront is the fallback selected by TPSCURATE_NO_NUMBA=1.

Usage: python benchmarks/bench_align.py [--pairs N] [--lengths 200,400,800]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from tpscurate import kernels

AA = np.frombuffer(b"ACDEFGHIKLMNPQRSTVWY", dtype=np.uint8)


def bench(fill, pairs, label):
    start = time.perf_counter()
    for a, b in pairs:
        fill(a, b, 1, -1, -1, -1)
    elapsed = time.perf_counter() - start
    cells = sum((a.size + 1) * (b.size + 1) for a, b in pairs)
    print(
        f"  {label:<18} {len(pairs) / elapsed:8.1f} pairs/s   "
        f"{cells / elapsed / 1e6:9.1f} Mcells/s   ({elapsed:.2f}s)"
    )
    return elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=200)
    parser.add_argument("--lengths", default="100,200,400,800")
    args = parser.parse_args()

    if not kernels.HAVE_NUMBA:
        print("numba is not importable; only the numpy wavefront path will run")

    rng = np.random.default_rng(0)
    for length in (int(l) for l in args.lengths.split(",")):
        pairs = [
            (rng.choice(AA, length), rng.choice(AA, length)) for _ in range(args.pairs)
        ]
        print(f"length {length}, {args.pairs} pairs:")
        if kernels.HAVE_NUMBA:
            jit_fill = kernels.numba.njit(cache=True, nogil=True)(kernels._fill_scalar)
            jit_fill(pairs[0][0], pairs[0][1], 1, -1, -1, -1)  # compile outside timing
            t_jit = bench(jit_fill, pairs, "numba @njit")
        t_np = bench(kernels._fill_wavefront, pairs, "numpy wavefront")
        if kernels.HAVE_NUMBA:
            print(f"  speedup: {t_np / t_jit:.1f}x")
        sample = pairs[: min(10, len(pairs))]
        if kernels.HAVE_NUMBA:
            for a, b in sample:
                assert np.array_equal(
                    jit_fill(a, b, 1, -1, -1, -1),
                    kernels._fill_wavefront(a, b, 1, -1, -1, -1),
                ), "kernel paths diverged"
            print("  checked: identical matrices on sample pairs")


if __name__ == "__main__":
    main()
