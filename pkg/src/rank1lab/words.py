"""Coding words of the stage-J tower over the stage-j level alphabet.

Reading the stage-J tower bottom to top and writing down, for each level,
the stage-j level that contains it (or SPACER) gives a word that obeys the
substitution W_{j,K+1} = W_{j,K} S^{s(1)} W_{j,K} S^{s(2)} ... W_{j,K} S^{s(r)}.
Symbols are stored as uint16 with 0xFFFF for the spacer.
"""

from __future__ import annotations

import io
import struct
from collections import Counter
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .construction import ConstructionError, ConstructionSpec, heights

SPACER = 0xFFFF
MAX_ALPHABET = 65534
EXPLICIT_CAP = 2**31
CSV_CAP = 10**5
MAGIC = b"R1W1"


class CapExceeded(RuntimeError):
    """A size cap (word length, alphabet, tower levels) was exceeded."""


@dataclass(frozen=True, eq=False)
class Word:
    """Coding word of the stage-``target`` tower over stage-``base`` levels.

    Exactly one of ``symbols`` (explicit uint16 array) or ``runs`` (pair of
    arrays: uint16 symbols, uint64 run lengths) is set.
    """

    base: int
    target: int
    length: int
    symbols: np.ndarray | None = None
    runs: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def storage(self) -> str:
        return "explicit" if self.symbols is not None else "rle"

    def __len__(self) -> int:
        return self.length

    def to_array(self) -> np.ndarray:
        if self.symbols is not None:
            return self.symbols
        if self.length > EXPLICIT_CAP:
            raise CapExceeded(f"word of length {self.length} exceeds explicit cap")
        sym, run = self.runs
        return np.repeat(sym, run.astype(np.int64))

    def iter_runs(self) -> Iterator[tuple[int, int]]:
        if self.runs is not None:
            for s, r in zip(self.runs[0].tolist(), self.runs[1].tolist()):
                yield s, r
            return
        sym, run = _rle_encode(self.symbols)
        yield from zip(sym.tolist(), run.tolist())

    def to_rle(self) -> "Word":
        if self.runs is not None:
            return self
        return Word(self.base, self.target, self.length, runs=_rle_encode(self.symbols))

    def to_explicit(self) -> "Word":
        if self.symbols is not None:
            return self
        return Word(self.base, self.target, self.length, symbols=self.to_array())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Word):
            return NotImplemented
        if (self.base, self.target, self.length) != (other.base, other.target, other.length):
            return False
        if self.runs is not None and other.runs is not None:
            return all(np.array_equal(x, y) for x, y in zip(self.runs, other.runs))
        return np.array_equal(self.to_array(), other.to_array())

    def text(self, sep: str = ",") -> str:
        return sep.join("S" if s == SPACER else str(s) for s in self.to_array().tolist())


def _rle_encode(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(arr) == 0:
        return np.zeros(0, np.uint16), np.zeros(0, np.uint64)
    edges = np.flatnonzero(arr[1:] != arr[:-1]) + 1
    starts = np.concatenate(([0], edges))
    lens = np.diff(np.concatenate((starts, [len(arr)])))
    return arr[starts].astype(np.uint16), lens.astype(np.uint64)


def _check_stages(spec: ConstructionSpec, base: int, target: int) -> list[int]:
    if not 1 <= base <= target:
        raise ConstructionError(f"need 1 <= base <= target, got base={base}, target={target}")
    a = heights(spec, target)
    if a[base - 1] > MAX_ALPHABET:
        raise CapExceeded(
            f"alphabet size a_{base} = {a[base - 1]} exceeds the 16-bit cap {MAX_ALPHABET}"
        )
    return a


def expand_word(
    spec: ConstructionSpec,
    base: int,
    target: int,
    storage: str = "auto",
    cap: int = EXPLICIT_CAP,
) -> Word:
    """Generate W_{base,target} by iterating the stacking substitution.

    ``storage`` is ``"explicit"``, ``"rle"`` or ``"auto"`` (explicit when
    a_target <= cap, RLE otherwise).
    """
    if storage not in ("auto", "explicit", "rle"):
        raise ValueError(f"unknown storage {storage!r}")
    a = _check_stages(spec, base, target)
    length = a[target - 1]
    if storage == "auto":
        storage = "explicit" if length <= cap else "rle"
    if storage == "explicit":
        if length > cap:
            raise CapExceeded(f"a_{target} = {length} exceeds the explicit cap {cap}")
        w = np.arange(a[base - 1], dtype=np.uint16)
        for k in range(base, target):
            parts = []
            for s in spec.spacers(k, a[:k]):
                parts.append(w)
                if s:
                    parts.append(np.full(s, SPACER, dtype=np.uint16))
            w = np.concatenate(parts)
        assert len(w) == length
        return Word(base, target, length, symbols=w)
    sym = np.arange(a[base - 1], dtype=np.uint16)
    run = np.ones(a[base - 1], dtype=np.uint64)
    for k in range(base, target):
        ps, pr = [], []
        for s in spec.spacers(k, a[:k]):
            ps.append(sym)
            pr.append(run)
            if s:
                ps.append(np.array([SPACER], np.uint16))
                pr.append(np.array([s], np.uint64))
        sym, run = _merge_runs(np.concatenate(ps), np.concatenate(pr))
    assert int(run.sum()) == length
    return Word(base, target, length, runs=(sym, run))


def _merge_runs(sym: np.ndarray, run: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(sym) < 2:
        return sym, run
    new = np.concatenate(([True], sym[1:] != sym[:-1]))
    idx = np.flatnonzero(new)
    return sym[idx], np.add.reduceat(run, idx).astype(np.uint64)


def iter_word_runs(spec: ConstructionSpec, base: int, target: int) -> Iterator[tuple[int, int]]:
    """Lazily yield (symbol, run) pairs of W_{base,target} without materializing it.

    Adjacent spacer runs are not merged.
    """
    a = _check_stages(spec, base, target)
    placements = {k: spec.spacers(k, a[:k]) for k in range(base, target)}

    def gen(K: int):
        if K == base:
            for x in range(a[base - 1]):
                yield x, 1
            return
        for s in placements[K - 1]:
            yield from gen(K - 1)
            if s:
                yield SPACER, s

    return gen(target)


def word_prefix(spec: ConstructionSpec, base: int, target: int, count: int) -> Word:
    """RLE word holding the first ``count`` symbols of W_{base,target}.

    Works for towers far beyond the explicit cap; ``length`` of the returned
    word is ``count``.
    """
    a = heights(spec, target)
    count = min(count, a[target - 1])
    sym, run, got = [], [], 0
    for s, r in iter_word_runs(spec, base, target):
        take = min(r, count - got)
        if sym and sym[-1] == s:
            run[-1] += take
        else:
            sym.append(s)
            run.append(take)
        got += take
        if got >= count:
            break
    return Word(base, target, count, runs=(np.array(sym, np.uint16), np.array(run, np.uint64)))


def symbol_counts(word: Word) -> dict[int, int]:
    """Exact occurrence count per symbol (SPACER included when present)."""
    if word.symbols is not None:
        vals, cnts = np.unique(word.symbols, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, cnts)}
    counts: Counter = Counter()
    for s, r in zip(word.runs[0].tolist(), word.runs[1].tolist()):
        counts[s] += r
    return dict(sorted(counts.items()))


def project_word(word: Word, spec: ConstructionSpec, new_base: int) -> Word:
    """Recode a word over the coarser stage ``new_base`` <= word.base.

    Each stage-j' level lies in exactly one stage-j level (or is a spacer
    added between stages j and j'), which W_{j,j'} records; spacers stay
    spacers.
    """
    if not 1 <= new_base <= word.base:
        raise ConstructionError(f"cannot project base {word.base} to {new_base}")
    if new_base == word.base:
        return word
    lookup = expand_word(spec, new_base, word.base, storage="explicit").symbols
    table = np.full(SPACER + 1, SPACER, dtype=np.uint16)
    table[: len(lookup)] = lookup
    if word.symbols is not None:
        return Word(new_base, word.target, word.length, symbols=table[word.symbols])
    sym, run = word.runs
    out = _merge_runs(table[sym], run)
    return Word(new_base, word.target, word.length, runs=out)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

_HEADER = struct.Struct("<4sIIQB")


def write_word(word: Word, fh) -> None:
    """Binary format: b"R1W1", u32 base, u32 target, u64 length, u8 storage, payload."""
    storage = 0 if word.symbols is not None else 1
    fh.write(_HEADER.pack(MAGIC, word.base, word.target, word.length, storage))
    if storage == 0:
        fh.write(np.ascontiguousarray(word.symbols, dtype="<u2").tobytes())
    else:
        sym, run = word.runs
        rec = np.empty(len(sym), dtype=[("s", "<u2"), ("r", "<u8")])
        rec["s"] = sym
        rec["r"] = run
        fh.write(rec.tobytes())


def read_word(fh) -> Word:
    head = fh.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise ValueError("truncated word file")
    magic, base, target, length, storage = _HEADER.unpack(head)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    payload = fh.read()
    if storage == 0:
        sym = np.frombuffer(payload, dtype="<u2").astype(np.uint16)
        if len(sym) != length:
            raise ValueError("payload length mismatch")
        return Word(base, target, length, symbols=sym)
    if storage == 1:
        rec = np.frombuffer(payload, dtype=[("s", "<u2"), ("r", "<u8")])
        run = rec["r"].astype(np.uint64)
        if int(run.sum()) != length:
            raise ValueError("run lengths do not sum to the word length")
        return Word(base, target, length, runs=(rec["s"].astype(np.uint16), run))
    raise ValueError(f"unknown storage byte {storage}")


def save_word(word: Word, path) -> None:
    with open(path, "wb") as fh:
        write_word(word, fh)


def load_word(path) -> Word:
    with open(path, "rb") as fh:
        return read_word(fh)


def word_bytes(word: Word) -> bytes:
    buf = io.BytesIO()
    write_word(word, buf)
    return buf.getvalue()


def word_csv(word: Word) -> str:
    if word.length > CSV_CAP:
        raise CapExceeded(f"CSV export is limited to {CSV_CAP} symbols")
    return word.text(",") + "\n"
