"""Compiled kernels vs the numpy fallback on a real coding word.

    python benchmarks/bench_kernels.py --preset classical --base 4 --target 15
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from rank1lab import _fallback, kernels
from rank1lab.construction import heights, preset
from rank1lab.words import expand_word


def timeit(fn, repeat):
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return statistics.median(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="classical")
    ap.add_argument("--base", type=int, default=4)
    ap.add_argument("--target", type=int, default=15)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    spec = preset(args.preset)
    word = expand_word(spec, args.base, args.target).to_array()
    A = heights(spec, args.base)[-1]
    n = heights(spec, args.target - 3)[-1]
    g = np.arange(A + 1, dtype=np.int64) % 5 - 2
    shifts = np.array([1, n, 2 * n + 1], dtype=np.int64)
    impls = {"python": _fallback}
    if kernels.BACKEND == "cython":
        from rank1lab import _kernels

        impls["cython"] = _kernels
    else:
        print("compiled extension not built; timing the fallback only")

    cases = {
        "pair_counts": lambda impl: kernels.pair_counts(word, n, A, impl=impl),
        "lag_dot(3 shifts)": lambda impl: kernels.lag_dot(word, g, shifts, impl=impl),
        "symbol_histogram": lambda impl: kernels.symbol_histogram(word, A, impl=impl),
    }
    print(f"word W_{{{args.base},{args.target}}} of {args.preset}: {len(word):,} symbols, alphabet {A}")
    print(f"{'kernel':<20}" + "".join(f"{k:>12}" for k in impls) + ("     speedup" if len(impls) == 2 else ""))
    for name, fn in cases.items():
        results = [fn(impl) for impl in impls.values()]
        assert all(np.array_equal(results[0], r) for r in results[1:]), name
        times = [timeit(lambda impl=impl: fn(impl), args.repeat) for impl in impls.values()]
        row = f"{name:<20}" + "".join(f"{t:>11.3f}s" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
