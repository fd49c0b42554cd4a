"""Literal cutting-and-stacking on rational intervals.

Every level of the stage-J tower is a half-open interval [x, x + w_J).  All
left endpoints are integer multiples of w_J (stage-1 levels sit at k w_1 and
spacers are allocated at multiples of the current width), so they are kept
as integers in units of w_J and turned into Fractions on output.

Conventions: column i takes the i-th subinterval of each level, left to
right; new spacer intervals are placed immediately right of all previously
allocated mass, in stacking order.
"""

from __future__ import annotations

import bisect
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .construction import ConstructionError, ConstructionSpec, heights
from .words import SPACER, CapExceeded

LEVEL_CAP = 10**6


@dataclass(frozen=True, eq=False)
class IntervalMap:
    """Stage-J tower as exact intervals.

    ``units[i]`` is the left endpoint of level i in units of ``width``.
    ``origin[i]`` is ``(kind, k)``: ``("base", 1)`` for stage-1 levels,
    ``("column", c)`` for the stage-(J-1) column it came from, or
    ``("spacer", k)`` for a spacer added at stage k.
    """

    stage: int
    width: Fraction
    units: np.ndarray
    origin: tuple

    def __len__(self) -> int:
        return len(self.units)

    def left(self, i: int) -> Fraction:
        return int(self.units[i]) * self.width

    @property
    def levels(self) -> list[tuple[Fraction, Fraction]]:
        w = self.width
        return [(u * w, (u + 1) * w) for u in self.units.tolist()]

    @property
    def translations(self) -> list[Fraction]:
        """Offset carrying level i onto level i + 1 (T acts by translation)."""
        w = self.width
        return [d * w for d in np.diff(self.units).tolist()]

    def measure(self) -> Fraction:
        return len(self.units) * self.width

    def apply(self, i: int, x: Fraction) -> Fraction:
        """Image under T of a point x in level i < a_J - 1."""
        lo, hi = self.left(i), self.left(i) + self.width
        if not lo <= x < hi:
            raise ValueError(f"{x} is not in level {i}")
        if i + 1 >= len(self.units):
            raise ValueError("T is undefined on the top level at this stage")
        return x + int(self.units[i + 1] - self.units[i]) * self.width

    def locate(self, x: Fraction) -> int | None:
        """Index of the level containing x, or None."""
        u = x / self.width
        k = int(u.numerator // u.denominator)
        hits = np.flatnonzero(self.units == k)
        return int(hits[0]) if len(hits) else None

    def to_dict(self) -> dict:
        def q(x: Fraction) -> str:
            return f"{x.numerator}/{x.denominator}"

        return {
            "stage": self.stage,
            "width": q(self.width),
            "levels": [[q(a), q(b)] for a, b in self.levels],
            "translations": [q(t) for t in self.translations],
            "origin": [list(o) for o in self.origin],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "IntervalMap":
        width = Fraction(d["width"])
        units = []
        for a, b in d["levels"]:
            a, b = Fraction(a), Fraction(b)
            if b - a != width:
                raise ValueError("level width mismatch")
            u = a / width
            if u.denominator != 1:
                raise ValueError("endpoint is not a multiple of the width")
            units.append(u.numerator)
        origin = tuple((o[0], int(o[1])) for o in d["origin"])
        return cls(int(d["stage"]), width, np.array(units, dtype=object), origin)


def build_tower_map(spec: ConstructionSpec, J: int, cap: int = LEVEL_CAP) -> IntervalMap:
    """Cut and stack from stage 1 up to stage J with exact endpoints."""
    if J < 1:
        raise ConstructionError("J must be >= 1")
    a = heights(spec, J)
    if a[-1] > cap:
        raise CapExceeded(f"stage {J} has {a[-1]} levels, over the geometry cap {cap}")
    width = spec.w1
    units = list(range(spec.h1 + 1))
    origin = [("base", 1)] * len(units)
    free = len(units)  # next unallocated offset, in current width units
    for K in range(1, J):
        r = spec.r(K)
        width = width / r
        units = [u * r for u in units]
        free *= r
        new_units, new_origin = [], []
        for col, s in enumerate(spec.spacers(K, a[:K])):
            new_units.extend(u + col for u in units)
            new_origin.extend([("column", col + 1)] * len(units))
            new_units.extend(range(free, free + s))
            new_origin.extend([("spacer", K)] * s)
            free += s
        units, origin = new_units, new_origin
    assert len(units) == a[-1]
    dtype = np.int64 if free < 2**62 else object
    return IntervalMap(J, width, np.array(units, dtype=dtype), tuple(origin))


def orbit_code(
    tmap: IntervalMap, start: int, steps: int, spec: ConstructionSpec, base: int
) -> list[int]:
    """Stage-``base`` symbols of levels start, ..., start + steps of the tower.

    Each stage-J level is located inside the stage-``base`` geometry purely by
    interval containment; levels outside every stage-``base`` level are
    spacers.
    """
    n_levels = len(tmap)
    if steps < 0 or start < 0:
        raise ValueError("start and steps must be >= 0")
    if start + steps >= n_levels:
        raise ValueError(f"orbit leaves the stage-{tmap.stage} tower ({n_levels} levels)")
    if not 1 <= base <= tmap.stage:
        raise ConstructionError("base stage must lie in [1, J]")
    coarse = build_tower_map(spec, base)
    ratio = coarse.width / tmap.width
    if ratio.denominator != 1:
        raise ConstructionError("stage widths are not nested")
    ratio = ratio.numerator
    lefts = [int(u) * ratio for u in coarse.units.tolist()]
    order = sorted(range(len(lefts)), key=lefts.__getitem__)
    sorted_lefts = [lefts[i] for i in order]

    if tmap.units.dtype == np.int64 and (not sorted_lefts or sorted_lefts[-1] + ratio < 2**62):
        x = tmap.units[start : start + steps + 1]
        sl = np.array(sorted_lefts, dtype=np.int64)
        k = np.searchsorted(sl, x, side="right") - 1
        kc = np.maximum(k, 0)
        hit = (k >= 0) & (x + 1 <= sl[kc] + ratio)
        sym = np.where(hit, np.array(order, dtype=np.int64)[kc], SPACER)
        return sym.tolist()

    out = []
    for i in range(start, start + steps + 1):
        x = int(tmap.units[i])
        k = bisect.bisect_right(sorted_lefts, x) - 1
        if k >= 0 and x + 1 <= sorted_lefts[k] + ratio:
            out.append(order[k])
        else:
            out.append(SPACER)
    return out
