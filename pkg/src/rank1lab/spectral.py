"""Autocorrelations <U^n g, g>, Fejer periodograms and the Cesaro statistic.

Measures are normalized to mu(X) = 1.  The stage-J word sees only the
stage-J tower; the mass added later is accounted for exactly at n = 0 (where
T^0 = I is known everywhere) and enters the error bound for n >= 1.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .correlation import LevelAlgebra, autocorrelation_batch, weight_table
from .words import SPACER

GRID = 4096
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def zero_mean_function(alg: LevelAlgebra, seed: int) -> dict:
    """g = 1_{E^seed} - mu(E^seed), the constant subtracted on spacers too.

    Weights are exact Fractions keyed by symbol (SPACER for the spacer).
    """
    if not 0 <= seed < alg.A:
        raise ValueError(f"seed symbol {seed} outside [0, {alg.A})")
    mu = alg.level_width / alg.total
    g = {a: -mu for a in range(alg.A)}
    g[seed] = 1 - mu
    g[SPACER] = -mu
    return g


def inner_product(alg: LevelAlgebra, g) -> Fraction:
    """<g, g> in the normalized measure, exact."""
    table = [Fraction(x) for x in weight_table(g, alg.A)]
    total = alg.total
    acc = sum(x * x for x in table[: alg.A]) * alg.level_width
    acc += table[alg.A] ** 2 * (total - alg.A * alg.level_width)
    return acc / total


def mean(alg: LevelAlgebra, g) -> Fraction:
    table = [Fraction(x) for x in weight_table(g, alg.A)]
    total = alg.total
    acc = sum(table[: alg.A]) * alg.level_width + table[alg.A] * (total - alg.A * alg.level_width)
    return acc / total


def fejer_periodogram(c: np.ndarray, N: int, grid: int = GRID) -> tuple[np.ndarray, np.ndarray]:
    """sigma(theta) = sum_{|n|<N} (1 - |n|/N) c_n cos(n theta) on ``grid`` points of [0, pi].

    Evaluated exactly (up to rounding) by folding the weighted sequence onto
    the DFT period 2 (grid - 1).
    """
    if N < 1 or len(c) < N:
        raise ValueError("need c_0..c_{N-1}")
    M = 2 * (grid - 1)
    n = np.arange(N)
    v = (1.0 - n / N) * np.asarray(c[:N], dtype=np.float64)
    folded = np.zeros(M)
    np.add.at(folded, n % M, v)
    np.add.at(folded, (-n[1:]) % M, v[1:])
    spec = np.fft.fft(folded).real[:grid]
    theta = np.pi * np.arange(grid) / (grid - 1)
    return theta, spec


@dataclass(eq=False)
class SpectralSequence:
    label: str
    base: int
    target: int
    g: list
    c: np.ndarray
    err: np.ndarray
    N: int
    theta: np.ndarray
    periodogram: np.ndarray
    cesaro: float
    mode: str
    c_exact: list | None = None

    def at(self, n: int) -> float:
        """c_n for any integer n (c_{-n} = c_n for real g)."""
        return float(self.c[abs(n)])

    def periodogram_integral(self) -> float:
        """(1/pi) * trapezoid integral of the periodogram over [0, pi]."""
        return float(_trapezoid(self.periodogram, self.theta) / np.pi)

    def sequence_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,c_n,bound\n")
        for n, (x, e) in enumerate(zip(self.c.tolist(), self.err.tolist())):
            buf.write(f"{n},{x!r},{e!r}\n")
        return buf.getvalue()

    def periodogram_csv(self) -> str:
        buf = io.StringIO()
        buf.write("theta,sigma\n")
        for t, s in zip(self.theta.tolist(), self.periodogram.tolist()):
            buf.write(f"{t!r},{s!r}\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "spec": self.label,
            "base": self.base,
            "target": self.target,
            "N": self.N,
            "mode": self.mode,
            "c0": float(self.c[0]),
            "cesaro": self.cesaro,
            "max_bound": float(self.err.max()),
            "periodogram_min": float(self.periodogram.min()),
            "periodogram_integral": self.periodogram_integral(),
        }


def spectral_sequence(
    alg: LevelAlgebra,
    g,
    N: int,
    mode: str = "fast",
    grid: int = GRID,
    threads: int | None = None,
) -> SpectralSequence:
    """c_n = <U^n g, g> for n = 0..N with error bounds, Fejer periodogram and Cesaro mean.

    c_n is the tower coincidence sum scaled by 1 / mu(X); c_0 also carries
    the mass beyond the stage-J tower.  The bound for c_n is
    (n w_J + [n > 0] * (mu(X) - a_J w_J)) * max|g|^2 / mu(X).
    """
    if not 1 <= N < alg.length:
        raise ValueError(f"N must lie in [1, a_J) = [1, {alg.length})")
    table = weight_table(g, alg.A)
    total = alg.total
    outside = total - alg.length * alg.width
    raw = autocorrelation_batch(None, alg.base, alg.target, table, N, mode=mode, threads=threads, algebra=alg)
    gS = Fraction(table[alg.A])
    c_exact = None
    if mode == "exact":
        c_exact = [x / total for x in raw]
        c_exact[0] += outside * gS * gS / total
        c = np.array([float(x) for x in c_exact])
    else:
        c = np.asarray(raw, dtype=np.float64) / float(total)
        c[0] += float(outside * gS * gS / total)
    gmax = max(abs(float(x)) for x in table)
    n = np.arange(N + 1)
    err = (n * float(alg.width) + (n > 0) * float(outside)) * gmax**2 / float(total)
    theta, sigma = fejer_periodogram(c, N, grid)
    cesaro = float(np.mean((c[:N] / c[0]) ** 2)) if c[0] != 0 else float("nan")
    return SpectralSequence(
        alg.spec.label, alg.base, alg.target, table, c, err, N, theta, sigma, cesaro, mode, c_exact
    )
