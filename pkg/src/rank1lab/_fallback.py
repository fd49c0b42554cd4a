"""Pure numpy versions of the counting kernels (same signatures as _kernels)."""

import numpy as np

_CHUNK = 1 << 22


def _codes(block: np.ndarray, A: int) -> np.ndarray:
    x = block.astype(np.int64)
    x[block == 0xFFFF] = A
    return x


def pair_counts(word, n, A, lo, hi):
    word = np.asarray(word)
    hi = min(hi, len(word) - n)
    out = np.zeros((A + 1) * (A + 1), dtype=np.int64)
    for c in range(lo, hi, _CHUNK):
        e = min(c + _CHUNK, hi)
        x = _codes(word[c:e], A)
        y = _codes(word[c + n : e + n], A)
        out += np.bincount(x * (A + 1) + y, minlength=(A + 1) * (A + 1))
    return out.reshape(A + 1, A + 1)


def lag_dot(word, weights, shifts, lo, hi):
    word = np.asarray(word)
    weights = np.asarray(weights, dtype=np.int64)
    A = len(weights) - 1
    out = np.zeros(len(shifts), dtype=np.int64)
    for k, n in enumerate(np.asarray(shifts).tolist()):
        top = min(hi, len(word) - n)
        acc = 0
        for c in range(lo, top, _CHUNK):
            e = min(c + _CHUNK, top)
            gx = weights[_codes(word[c:e], A)]
            gy = weights[_codes(word[c + n : e + n], A)]
            acc += int(np.dot(gx, gy))
        out[k] = acc
    return out


def symbol_histogram(word, A):
    return np.bincount(_codes(np.asarray(word), A), minlength=A + 1).astype(np.int64)
