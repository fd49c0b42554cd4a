"""Kernel dispatch and deterministic chunked reductions.

The compiled extension ``_kernels`` is used when importable; setting
``RANK1LAB_PURE=1`` forces the numpy fallback.  Work is split into chunks of
fixed size independent of the thread count and reduced in chunk order, so
integer results are exact and float results are bit-identical for any
number of workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import fft as sfft

from . import _fallback

try:
    if os.environ.get("RANK1LAB_PURE"):
        raise ImportError
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:  # extension not built
    _impl = _fallback
    BACKEND = "python"

CHUNK = 1 << 22
FFT_CHUNK = 1 << 20


def resolve_threads(threads: int | None = None) -> int:
    env = os.environ.get("RANK1LAB_THREADS")
    if env:
        threads = int(env)
    if threads is None:
        threads = 1
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


def _map(fn, items, threads):
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _ranges(stop: int, chunk: int = CHUNK):
    return [(c, min(c + chunk, stop)) for c in range(0, stop, chunk)]


def pair_counts(word: np.ndarray, n: int, A: int, threads: int | None = None, impl=None) -> np.ndarray:
    """Integer count matrix of (W[i], W[i+n]) pairs, spacer on index A."""
    impl = impl or _impl
    L = len(word)
    if not 0 <= n < L:
        raise ValueError(f"shift {n} outside [0, {L})")
    parts = _map(lambda r: impl.pair_counts(word, n, A, r[0], r[1]), _ranges(L - n), resolve_threads(threads))
    out = np.zeros((A + 1, A + 1), dtype=np.int64)
    for p in parts:
        out += p
    return out


def lag_dot(word: np.ndarray, weights: np.ndarray, shifts, threads: int | None = None, impl=None) -> np.ndarray:
    """Exact integer sums sum_i g(W[i]) g(W[i+n]) for each shift n."""
    impl = impl or _impl
    weights = np.ascontiguousarray(weights, dtype=np.int64)
    shifts = np.ascontiguousarray(shifts, dtype=np.int64)
    L = len(word)
    gmax = int(np.abs(weights).max()) if len(weights) else 0
    if gmax * gmax * L >= 2**63:
        raise OverflowError("integer weights too large for int64 accumulation")
    if len(shifts) and (shifts.min() < 0 or shifts.max() >= L):
        raise ValueError("shift outside the word")
    parts = _map(lambda r: impl.lag_dot(word, weights, shifts, r[0], r[1]), _ranges(L), resolve_threads(threads))
    out = np.zeros(len(shifts), dtype=np.int64)
    for p in parts:
        out += p
    return out


def symbol_histogram(word: np.ndarray, A: int, impl=None) -> np.ndarray:
    impl = impl or _impl
    return impl.symbol_histogram(word, A)


def weight_sequence(word: np.ndarray, weights: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Float values g(W[i]) for i in [lo, hi)."""
    A = len(weights) - 1
    block = word[lo:hi]
    idx = block.astype(np.int64)
    idx[block == 0xFFFF] = A
    return np.asarray(weights, dtype=np.float64)[idx]


def fft_autocorrelation(
    word: np.ndarray, weights: np.ndarray, n_max: int, threads: int | None = None
) -> np.ndarray:
    """Float sums sum_{i < L-n} g(W[i]) g(W[i+n]) for n = 0..n_max via chunked FFT.

    Chunk boundaries and the reduction order are fixed, so the output does
    not depend on ``threads``.
    """
    L = len(word)
    if not 0 <= n_max < L:
        raise ValueError(f"n_max {n_max} outside [0, {L})")
    M = max(FFT_CHUNK, 1 << int(np.ceil(np.log2(n_max + 1))))
    size = sfft.next_fast_len(M + n_max, real=True)

    def one(rng):
        lo, hi = rng
        x = weight_sequence(word, weights, lo, hi)
        y = weight_sequence(word, weights, lo, min(hi + n_max, L))
        fx = sfft.rfft(x, size)
        fy = sfft.rfft(y, size)
        r = sfft.irfft(fy * np.conj(fx), size)[: n_max + 1]
        return r

    parts = _map(one, _ranges(L, M), resolve_threads(threads))
    out = np.zeros(n_max + 1)
    for p in parts:
        out += p
    return out
