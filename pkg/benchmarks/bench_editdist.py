#!/usr/bin/env python3
"""Benchmark the compiled edit-distance kernel against the pure-Python one.

Runs the same random workload through both backends, checks they agree,
and reports per-backend wall time plus the speedup. The package picks the
compiled kernel automatically when it is importable; this script is the
evidence for keeping the extension around.

Usage: python3 benchmarks/bench_editdist.py [--pairs N] [--repeats R] [--seed S]
"""

import argparse
import time

import numpy as np

from errgen._kernels import editdist_py

try:
    from errgen._kernels import _editdist
except ImportError:
    _editdist = None


def _workload(rng, pairs, max_len, vocab=12):
    out = []
    for _ in range(pairs):
        na, nb = rng.integers(0, max_len + 1, size=2)
        out.append((
            rng.integers(0, vocab, size=na).astype(np.int32),
            rng.integers(0, vocab, size=nb).astype(np.int32),
        ))
    return out


def _time_backend(impl, workload, repeats):
    best = float("inf")
    checksum = 0
    for _ in range(repeats):
        start = time.perf_counter()
        checksum = 0
        for a, b in workload:
            cost, _ops = impl.edit_script(a, b)
            checksum += cost
        best = min(best, time.perf_counter() - start)
    return best, checksum


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--pairs", type=int, default=2000, help="pairs per length bucket")
    parser.add_argument("--repeats", type=int, default=5, help="timed repeats, best taken")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print("%-10s %-12s %-12s %s" % ("max_len", "python", "cython", "speedup"))
    for max_len in (5, 15, 40, 100):
        workload = _workload(rng, args.pairs, max_len)
        py_time, py_sum = _time_backend(editdist_py, workload, args.repeats)
        row = "%-10d %-12s" % (max_len, "%.3fs" % py_time)
        if _editdist is None:
            print(row + " (compiled kernel not built)")
            continue
        cy_time, cy_sum = _time_backend(_editdist, workload, args.repeats)
        if cy_sum != py_sum:
            raise SystemExit("backend disagreement: %d vs %d" % (py_sum, cy_sum))
        print(row + " %-12s %.1fx" % ("%.3fs" % cy_time, py_time / cy_time))


if __name__ == "__main__":
    main()
