"""Level-algebra correlation matrices from coincidence counts.

Inside the stage-J tower T moves every level but the top one up by one, so
for a stage-j level pair (a, b)

    C_n(a, b) = w_J * #{i <= a_J - 1 - n : W[i] = a, W[i + n] = b}

is a lower bound for mu(E^a cap T^{-n} E^b) that misses at most the top n
levels, i.e. at most n w_J of mass.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .construction import ConstructionError, ConstructionSpec, MeasureClass, classify_measure, heights
from .words import EXPLICIT_CAP, SPACER, Word, expand_word


def _q(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Counts of stage-``base`` symbol pairs at distance ``shift`` in W_{base,target}.

    Index ``A`` (the last row/column) is the spacer.  ``shift`` may be
    negative; then ``counts`` is the transpose of the positive-shift counts.
    """

    base: int
    target: int
    shift: int
    counts: np.ndarray
    width: Fraction
    hist: np.ndarray = field(repr=False)

    @property
    def A(self) -> int:
        return self.counts.shape[0] - 1

    @property
    def err(self) -> Fraction:
        """Bound on mu(E^a cap T^{-n} E^b) - C(a, b) for every pair."""
        return abs(self.shift) * self.width

    def level_measure(self, a: int) -> Fraction:
        return int(self.hist[a]) * self.width

    def C_exact(self, a: int, b: int) -> Fraction:
        return int(self.counts[a, b]) * self.width

    @property
    def C(self) -> np.ndarray:
        """Exact measure matrix as an object array of Fractions."""
        w = self.width
        return np.array([[int(c) * w for c in row] for row in self.counts.tolist()], dtype=object)

    def R_exact(self, a: int, b: int) -> Fraction:
        return Fraction(int(self.counts[a, b]), int(self.hist[a]))

    @cached_property
    def R(self) -> np.ndarray:
        """Rows a < A normalized by mu(E^a); shape (A, A + 1)."""
        return self.counts[: self.A].astype(np.float64) / self.hist[: self.A, None].astype(np.float64)

    def transpose(self) -> "CorrelationMatrix":
        return CorrelationMatrix(
            self.base, self.target, -self.shift, np.ascontiguousarray(self.counts.T), self.width, self.hist
        )

    def labels(self) -> list[str]:
        return [str(a) for a in range(self.A)] + ["S"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        lab = self.labels()
        wr.writerow(["counts"] + lab)
        for a, row in zip(lab, self.counts.tolist()):
            wr.writerow([a] + row)
        wr.writerow(["C"] + lab)
        for a, row in zip(lab, self.C.tolist()):
            wr.writerow([a] + [_q(x) for x in row])
        wr.writerow(["R"] + lab)
        for a, row in zip(lab, self.R.tolist()):
            wr.writerow([a] + [repr(x) for x in row])
        return buf.getvalue()

    def summary(self) -> dict:
        diag = np.diag(self.R[:, : self.A])
        return {
            "base": self.base,
            "target": self.target,
            "shift": self.shift,
            "width": _q(self.width),
            "err": _q(self.err),
            "alphabet": self.A,
            "diag_min": float(diag.min()),
            "diag_max": float(diag.max()),
            "total_count": int(self.counts.sum()),
        }


class LevelAlgebra:
    """The stage-``base`` level algebra observed through the stage-``target`` word.

    Holds the explicit coding word and caches correlation matrices by shift.
    """

    def __init__(
        self,
        spec: ConstructionSpec,
        base: int,
        target: int | None = None,
        threads: int | None = None,
        cap: int = EXPLICIT_CAP,
        word: Word | None = None,
    ):
        if target is None:
            target = base + 6
        self.spec = spec
        self.base = base
        self.target = target
        self.threads = threads
        self.a = heights(spec, target)
        if word is None:
            word = expand_word(spec, base, target, storage="explicit", cap=cap)
        if (word.base, word.target) != (base, target):
            raise ConstructionError("word stages do not match the algebra")
        self.word = word
        self.symbols = word.to_array()
        self.A = self.a[base - 1]
        self.length = self.a[target - 1]
        level_width = spec.w1
        for k in range(1, base):
            level_width /= spec.r(k)
        width = level_width
        for k in range(base, target):
            width /= spec.r(k)
        self.level_width = level_width
        self.width = width
        self.hist = kernels.symbol_histogram(self.symbols, self.A)
        self._cache: dict[int, CorrelationMatrix] = {}

    def __repr__(self) -> str:
        return f"LevelAlgebra({self.spec.label!r}, base={self.base}, target={self.target})"

    def matrix(self, n: int) -> CorrelationMatrix:
        if n < 0:
            return self.matrix(-n).transpose()
        if n >= self.length:
            raise ValueError(f"shift {n} >= a_{self.target} = {self.length}")
        m = self._cache.get(n)
        if m is None:
            counts = kernels.pair_counts(self.symbols, n, self.A, self.threads)
            m = CorrelationMatrix(self.base, self.target, n, counts, self.width, self.hist)
            self._cache[n] = m
        return m

    def forget(self) -> None:
        self._cache.clear()

    @cached_property
    def measure_class(self) -> MeasureClass:
        return classify_measure(self.spec)

    @cached_property
    def total(self) -> Fraction:
        """mu(X): exact when the tail is geometric, else the bracket midpoint."""
        mc = self.measure_class
        if not mc.finite:
            raise ConstructionError(f"{self.spec.label}: measure is {mc.kind}; normalization unavailable")
        return mc.normalizer()

    @cached_property
    def theta(self) -> np.ndarray:
        """Matrix of Theta on the level algebra: every row is the normalized measure vector."""
        total = self.total
        mu = np.empty(self.A + 1)
        mu[: self.A] = float(self.level_width / total)
        mu[self.A] = float((total - self.A * self.level_width) / total)
        return np.tile(mu, (self.A, 1))

    def block_starts(self) -> np.ndarray:
        """Positions of symbol 0, i.e. where copies of W_{base,base} begin."""
        return np.flatnonzero(self.symbols == 0)

    def weights_vector(self, g) -> list:
        """Normalize a weight table (mapping or sequence) to a list of length A + 1."""
        return weight_table(g, self.A)


def weight_table(g, A: int) -> list:
    if isinstance(g, Mapping):
        out = [0] * (A + 1)
        for k, v in g.items():
            idx = A if k in (SPACER, "S") else int(k)
            if not 0 <= idx <= A:
                raise ValueError(f"symbol {k} outside alphabet of size {A}")
            out[idx] = v
        return out
    g = list(g)
    if len(g) != A + 1:
        raise ValueError(f"weight table needs {A + 1} entries (spacer last), got {len(g)}")
    return g


def correlation_matrix(
    spec: ConstructionSpec,
    base: int,
    target: int | None,
    n: int,
    threads: int | None = None,
    cap: int = EXPLICIT_CAP,
) -> CorrelationMatrix:
    """Correlation matrix at shift n; ``target`` defaults to base + 6."""
    alg = LevelAlgebra(spec, base, target, threads=threads, cap=cap)
    if abs(n) >= alg.length:
        raise ValueError(f"shift {n} >= a_{alg.target} = {alg.length}")
    return alg.matrix(n)


def _exact_weights(g: Sequence) -> tuple[list[int], int]:
    fr = [Fraction(x) for x in g]
    den = math.lcm(*(x.denominator for x in fr)) if fr else 1
    return [int(x * den) for x in fr], den


def autocorrelation_batch(
    spec: ConstructionSpec | None,
    base: int,
    target: int,
    g,
    n_max: int,
    mode: str = "exact",
    threads: int | None = None,
    algebra: LevelAlgebra | None = None,
    shifts: Sequence[int] | None = None,
):
    """c_n = w_J * sum_{i <= a_J - 1 - n} g(W[i]) g(W[i + n]).

    ``mode="exact"`` returns a list of Fractions (integer sliding sums, or
    per-shift count matrices when the integer weights would overflow int64);
    ``mode="fast"`` returns float64 values from chunked FFT correlation,
    accurate to float rounding only.  ``shifts`` restricts exact mode to a
    sparse set; the result is then aligned with ``shifts``.
    """
    alg = algebra or LevelAlgebra(spec, base, target, threads=threads)
    if (alg.base, alg.target) != (base, target):
        raise ConstructionError("algebra stages do not match the request")
    if not 0 <= n_max < alg.length:
        raise ValueError(f"n_max {n_max} outside [0, a_{target})")
    table = weight_table(g, alg.A)
    if mode == "fast":
        if shifts is not None:
            raise ValueError("fast mode computes the dense range 0..n_max")
        vals = kernels.fft_autocorrelation(alg.symbols, np.array([float(x) for x in table]), n_max, threads)
        return vals * float(alg.width)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    shift_list = list(range(n_max + 1)) if shifts is None else [int(s) for s in shifts]
    if any(not 0 <= s < alg.length for s in shift_list):
        raise ValueError("shift outside the word")
    ints, den = _exact_weights(table)
    gmax = max((abs(x) for x in ints), default=0)
    if gmax * gmax * alg.length < 2**63:
        sums = kernels.lag_dot(alg.symbols, np.array(ints, dtype=np.int64), shift_list, threads)
        scale = alg.width / (den * den)
        return [int(s) * scale for s in sums.tolist()]
    fr = [Fraction(x) for x in table]
    out = []
    for s in shift_list:
        counts = kernels.pair_counts(alg.symbols, s, alg.A, threads)
        rows, cols = np.nonzero(counts)
        acc = Fraction(0)
        for a, b in zip(rows.tolist(), cols.tolist()):
            acc += fr[a] * fr[b] * int(counts[a, b])
        out.append(acc * alg.width)
    return out


def matrix_json(m: CorrelationMatrix, config: dict | None = None) -> str:
    d = m.summary()
    if config is not None:
        d["config"] = config
    return json.dumps(d, indent=1, sort_keys=True) + "\n"
