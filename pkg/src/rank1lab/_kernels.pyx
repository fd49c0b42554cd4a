# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled counting kernels over uint16 coding words (0xFFFF = spacer)."""

import numpy as np

from libc.stdint cimport int64_t, uint16_t


def pair_counts(const uint16_t[::1] word, Py_ssize_t n, Py_ssize_t A,
                Py_ssize_t lo, Py_ssize_t hi):
    """counts[a, b] = #{i in [lo, hi) : i + n < L, W[i] = a, W[i + n] = b}.

    The spacer symbol is folded onto index A.
    """
    cdef Py_ssize_t L = word.shape[0]
    if hi > L - n:
        hi = L - n
    out = np.zeros((A + 1, A + 1), dtype=np.int64)
    cdef int64_t[:, ::1] c = out
    cdef Py_ssize_t i, x, y
    with nogil:
        for i in range(lo, hi):
            x = word[i]
            y = word[i + n]
            if x == 0xFFFF:
                x = A
            if y == 0xFFFF:
                y = A
            c[x, y] += 1
    return out


def lag_dot(const uint16_t[::1] word, const int64_t[::1] weights,
            const int64_t[::1] shifts, Py_ssize_t lo, Py_ssize_t hi):
    """out[k] = sum over i in [lo, hi), i + shifts[k] < L of g(W[i]) g(W[i + shifts[k]]).

    ``weights`` has length A + 1 with the spacer weight last.  The caller
    guarantees the sums fit in int64.
    """
    cdef Py_ssize_t L = word.shape[0]
    cdef Py_ssize_t A = weights.shape[0] - 1
    cdef Py_ssize_t k, i, n, top, x, y
    cdef int64_t acc
    out = np.zeros(shifts.shape[0], dtype=np.int64)
    cdef int64_t[::1] o = out
    with nogil:
        for k in range(shifts.shape[0]):
            n = shifts[k]
            top = hi
            if top > L - n:
                top = L - n
            acc = 0
            for i in range(lo, top):
                x = word[i]
                y = word[i + n]
                if x == 0xFFFF:
                    x = A
                if y == 0xFFFF:
                    y = A
                acc += weights[x] * weights[y]
            o[k] = acc
    return out


def symbol_histogram(const uint16_t[::1] word, Py_ssize_t A):
    """Occurrences of each symbol, spacer folded onto index A."""
    out = np.zeros(A + 1, dtype=np.int64)
    cdef int64_t[::1] c = out
    cdef Py_ssize_t i, x
    with nogil:
        for i in range(word.shape[0]):
            x = word[i]
            if x == 0xFFFF:
                x = A
            c[x] += 1
    return out
