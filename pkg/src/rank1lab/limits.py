"""Weak-limit fitting, partial-rigidity estimates and related scans.

A weak limit of T^n is a Markov operator; on the stage-j level algebra it
is approximated by the row-normalized correlation matrix R_n.  Fits express
R_n as a nonnegative combination of R_m (|m| <= K) and Theta, with the
leftover mass 1 - sum(alpha) - beta reported as the remainder gamma.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .correlation import CorrelationMatrix, LevelAlgebra

KAPPA_GRID = np.round(np.arange(101) / 100, 2)
SUM_TOL = 1e-6


class AnalysisError(ValueError):
    """Invalid analysis request (bad K, infinite measure, empty search set)."""


# --------------------------------------------------------------------------
# nonnegative least squares
# --------------------------------------------------------------------------


def nnls(A: np.ndarray, b: np.ndarray, max_iter: int | None = None) -> tuple[np.ndarray, float]:
    """Lawson-Hanson active-set solution of min ||Ax - b|| subject to x >= 0.

    Ties in the entering variable go to the lowest index, so the result is
    fully deterministic.  Returns (x, ||Ax - b||).
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    if b.shape != (m,):
        raise ValueError("incompatible dimensions")
    max_iter = max_iter or 3 * n + 30
    tol = 10 * np.finfo(float).eps * max(m, n) * max(1.0, np.abs(A).sum(axis=0).max(initial=0))
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    w = A.T @ (b - A @ x)
    for _ in range(max_iter):
        free = ~passive
        if not free.any() or w[free].max() <= tol:
            break
        cand = np.where(free, w, -np.inf)
        t = int(np.argmax(cand))
        passive[t] = True
        while True:
            idx = np.flatnonzero(passive)
            z = np.zeros(n)
            z[idx] = np.linalg.lstsq(A[:, idx], b, rcond=None)[0]
            if (z[idx] > tol).all():
                break
            bad = idx[z[idx] <= tol]
            alpha = np.min(x[bad] / (x[bad] - z[bad]))
            x = x + alpha * (z - x)
            passive &= x > tol
            x[~passive] = 0.0
            if not passive.any():
                z = np.zeros(n)
                break
        x = z
        w = A.T @ (b - A @ x)
    else:
        raise RuntimeError("nnls: iteration limit reached")
    return x, float(np.linalg.norm(A @ x - b))


def nnls_capped(A: np.ndarray, b: np.ndarray, cap: float = 1.0) -> np.ndarray:
    """NNLS with the extra constraint sum(x) <= cap.

    If the plain solution breaks the cap, the constraint is active at the
    optimum and is imposed as a heavily weighted equation row.
    """
    x, _ = nnls(A, b)
    if x.sum() <= cap:
        return x
    lam = 1e4 * max(1.0, float(np.linalg.norm(A, 2)))
    A2 = np.vstack([A, lam * np.ones(A.shape[1])])
    b2 = np.concatenate([b, [lam * cap]])
    x, _ = nnls(A2, b2)
    s = x.sum()
    if s > cap:
        x = x * (cap / s)
    return x


# --------------------------------------------------------------------------
# weak-limit fits
# --------------------------------------------------------------------------


@dataclass
class WeakLimitFit:
    """R_n ~ sum_m alpha_m R_m + beta Theta, remainder gamma = 1 - sum alpha - beta."""

    shift: int
    K: int
    alpha: dict[int, float]
    beta: float
    residual: float
    base: int = 0
    target: int = 0
    err: Fraction = Fraction(0)
    convention: str = ""

    @property
    def poly_mass(self) -> float:
        return float(sum(self.alpha.values()))

    @property
    def gamma(self) -> float:
        return max(0.0, 1.0 - self.poly_mass - self.beta)

    def coef(self, m: int) -> float:
        return self.alpha.get(m, 0.0)

    def ranked(self) -> list[tuple[int, float]]:
        """Dictionary coefficients sorted by size (ties: smaller |m| first)."""
        return sorted(self.alpha.items(), key=lambda kv: (-kv[1], abs(kv[0]), kv[0]))

    def to_dict(self) -> dict:
        return {
            "shift": self.shift,
            "convention": self.convention,
            "base": self.base,
            "target": self.target,
            "K": self.K,
            "alpha": {str(m): self.alpha[m] for m in sorted(self.alpha)},
            "theta": self.beta,
            "remainder": self.gamma,
            "poly_mass": self.poly_mass,
            "residual": self.residual,
            "err": f"{self.err.numerator}/{self.err.denominator}",
        }


def _row_weights(matrix: CorrelationMatrix) -> np.ndarray:
    mu = matrix.hist[: matrix.A].astype(np.float64)
    return np.sqrt(mu / mu.sum())


def fit_weak_limit(
    matrix: CorrelationMatrix,
    K: int,
    theta: np.ndarray | None,
    dictionary,
) -> WeakLimitFit:
    """Fit R_n against {R_m : |m| <= K} and Theta by capped NNLS.

    ``dictionary`` maps m to the correlation matrix at shift m on the same
    (base, target) pair (a :class:`LevelAlgebra` works).  Pass
    ``theta=None`` to fit without Theta (e.g. for infinite measure).
    Entries are weighted by mu(E^a); the residual is the root mean square
    over matrix entries.
    """
    A = matrix.A
    if K < 0:
        raise AnalysisError("K must be >= 0")
    if K >= A:
        raise AnalysisError(f"K = {K} must be smaller than the alphabet size a_j = {A}")
    get = dictionary.matrix if isinstance(dictionary, LevelAlgebra) else dictionary.__getitem__
    ms = list(range(-K, K + 1))
    cols = []
    for m in ms:
        dm = get(m)
        if (dm.base, dm.target) != (matrix.base, matrix.target):
            raise AnalysisError("dictionary matrices must share the stages of the target")
        cols.append(dm.R.ravel())
    if theta is not None:
        if theta.shape != matrix.R.shape:
            raise AnalysisError("theta has the wrong shape")
        cols.append(np.asarray(theta).ravel())
    D = np.stack(cols, axis=1)
    y = matrix.R.ravel()
    wt = np.repeat(_row_weights(matrix), A + 1) * np.sqrt(A)
    x = nnls_capped(D * wt[:, None], y * wt, 1.0)
    fitted = D @ x
    residual = float(np.sqrt(np.mean((fitted - y) ** 2)))
    alpha = {m: float(c) for m, c in zip(ms, x[: len(ms)])}
    beta = float(x[len(ms)]) if theta is not None else 0.0
    return WeakLimitFit(
        matrix.shift,
        K,
        alpha,
        beta,
        residual,
        matrix.base,
        matrix.target,
        matrix.err / matrix.level_measure(0),
    )


def fit_shift(alg: LevelAlgebra, n: int, K: int, use_theta: bool = True) -> WeakLimitFit:
    if use_theta and not alg.measure_class.finite:
        raise AnalysisError(f"Theta needs a finite measure; {alg.spec.label} is {alg.measure_class.kind}")
    theta = alg.theta if use_theta else None
    fit = fit_weak_limit(alg.matrix(n), K, theta, alg)
    fit.convention = f"T^{n}"
    return fit


def fit_best_convention(
    alg: LevelAlgebra, n: int, K: int, use_theta: bool = True, key=None
) -> WeakLimitFit:
    """Probe shifts n-1, n, n+1 in both signs; return the fit minimizing ``key``.

    ``key`` defaults to the residual.  The chosen shift and sign are recorded
    in ``convention``.
    """
    key = key or (lambda f: f.residual)
    best = None
    for sign in (1, -1):
        for d in (0, -1, 1):
            m = sign * (n + d)
            if not 0 < abs(m) < alg.length:
                continue
            f = fit_shift(alg, m, K, use_theta)
            f.convention = f"{'+' if sign > 0 else '-'}({n}{d:+d})" if d else f"{'+' if sign > 0 else '-'}{n}"
            if best is None or key(f) < key(best):
                best = f
    if best is None:
        raise AnalysisError(f"no admissible shift near {n}")
    return best


# --------------------------------------------------------------------------
# rigidity
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RigidityEntry:
    n: int
    rho: float
    exact: bool
    err: float


@dataclass
class RigidityReport:
    """Partial-rigidity estimates rho(n) = min_a R_n(a, a), sorted descending."""

    base: int
    target: int
    entries: list[RigidityEntry] = field(default_factory=list)

    @property
    def best(self) -> RigidityEntry:
        return self.entries[0]

    def rho(self, n: int) -> float:
        for e in self.entries:
            if e.n == n:
                return e.rho
        raise KeyError(n)

    def leaderboard_csv(self, limit: int | None = None) -> str:
        rows = ["n,rho,mode,err_over_mu"]
        for e in self.entries[:limit]:
            rows.append(f"{e.n},{e.rho!r},{'exact' if e.exact else 'fast'},{e.err!r}")
        return "\n".join(rows) + "\n"

    def to_dict(self, limit: int = 20) -> dict:
        return {
            "base": self.base,
            "target": self.target,
            "best": {"n": self.best.n, "rho": self.best.rho, "exact": self.best.exact},
            "top": [e.__dict__ for e in self.entries[:limit]],
        }


def rho_exact(alg: LevelAlgebra, n: int) -> float:
    """min over non-spacer levels a of R_n(a, a) from the full count matrix."""
    R = alg.matrix(n).R
    return float(np.diag(R[:, : alg.A]).min())


def composite_shifts(alg: LevelAlgebra) -> list[int]:
    """{a_k} and {a_k +- a_l} for k, l <= target, inside (0, a_target)."""
    a = alg.a
    out = set(a)
    for x in a:
        for y in a:
            out.add(x + y)
            out.add(x - y)
    return sorted(n for n in out if 0 < n < alg.length)


def block_coincidences(alg: LevelAlgebra, shifts: Iterable[int]) -> np.ndarray:
    """Exact #{i : W[i] = 0 and W[i + n] = 0} for each n (via sorted positions)."""
    starts = alg.block_starts()
    out = []
    for n in shifts:
        pos = np.searchsorted(starts, starts + n)
        pos = np.minimum(pos, len(starts) - 1)
        out.append(int(np.count_nonzero(starts[pos] == starts + n)))
    return np.array(out, dtype=np.int64)


def fast_rho(alg: LevelAlgebra, n_max: int, threads: int | None = None) -> np.ndarray:
    """R_n(0, 0) for n = 0..n_max from an FFT autocorrelation of 1_{E^0}."""
    g = np.zeros(alg.A + 1)
    g[0] = 1.0
    corr = kernels.fft_autocorrelation(alg.symbols, g, n_max, threads)
    return corr / float(alg.hist[0])


def rigidity_scan(
    alg: LevelAlgebra,
    candidates: Sequence[int] | None = None,
    n_max: int = 10**5,
    top: int = 20,
    threads: int | None = None,
) -> RigidityReport:
    """Rank shifts by rho(n) = min_a R_n(a, a).

    Screening uses R_n(0, 0): the dense range [1, n_max] by FFT and the
    sparse composite set {a_k, a_k +- a_l} (or the given ``candidates``)
    by exact block coincidence counts.  The ``top`` screened shifts are then
    recomputed exactly from full count matrices.
    """
    screened: dict[int, tuple[float, bool]] = {}
    if candidates is None:
        n_max = min(n_max, alg.length - 1)
        if n_max >= 1:
            vals = fast_rho(alg, n_max, threads)
            for n in range(1, n_max + 1):
                screened[n] = (float(vals[n]), False)
        sparse = [n for n in composite_shifts(alg) if n > n_max]
    else:
        sparse = sorted({int(n) for n in candidates})
        if any(not 0 <= n < alg.length for n in sparse):
            raise AnalysisError("candidate shift outside the stage-J tower")
    if sparse:
        co = block_coincidences(alg, sparse)
        for n, c in zip(sparse, co.tolist()):
            screened[n] = (c / float(alg.hist[0]), True)
    if not screened:
        raise AnalysisError("empty candidate set")
    order = sorted(screened, key=lambda n: (-screened[n][0], n))
    scale = float(alg.width / alg.level_width)
    entries = []
    for i, n in enumerate(order):
        if i < top or n == 0:
            entries.append(RigidityEntry(n, rho_exact(alg, n), True, n * scale))
        else:
            entries.append(RigidityEntry(n, screened[n][0], False, n * scale))
    entries.sort(key=lambda e: (-e.rho, not e.exact, e.n))
    return RigidityReport(alg.base, alg.target, entries)


# --------------------------------------------------------------------------
# kappa-mixing
# --------------------------------------------------------------------------


def identity_R(A: int) -> np.ndarray:
    R0 = np.zeros((A, A + 1))
    R0[np.arange(A), np.arange(A)] = 1.0
    return R0


def kappa_distance(matrix: CorrelationMatrix, theta: np.ndarray) -> tuple[float, float]:
    """Minimize max |R_n - ((1 - k) R_0 + k Theta)| over k on a 0.01 grid.

    Returns (k, distance); ties go to the smaller k.
    """
    if theta is None:
        raise AnalysisError("kappa distance needs Theta (finite measure)")
    R = matrix.R
    R0 = identity_R(matrix.A)
    best = (0.0, np.inf)
    for k in KAPPA_GRID:
        d = float(np.abs(R - ((1 - k) * R0 + k * theta)).max())
        if d < best[1]:
            best = (float(k), d)
    return best


# --------------------------------------------------------------------------
# polynomial limits
# --------------------------------------------------------------------------


def poly_score(fit: WeakLimitFit, p: int) -> tuple[float, int]:
    """Distance of a fit from (I + T^{+-p}) / 2; returns (score, sign of p used)."""
    if p == 0:
        return fit.residual + abs(fit.coef(0) - 1.0), 0
    best = None
    for sign in (1, -1):
        s = fit.residual + abs(fit.coef(0) - 0.5) + abs(fit.coef(sign * p) - 0.5)
        if best is None or s < best[0]:
            best = (s, sign)
    return best


def poly_search_set(
    alg: LevelAlgebra, p: int, n_max: int = 10**5, size: int = 16, threads: int | None = None
) -> list[int]:
    """Shortlist shifts whose block statistics look like (I + T^{+-p}) / 2.

    R_n(0,0) estimates alpha_0 and R_{n+-p}(0,0) estimates alpha_{-+p}; both
    come from one FFT autocorrelation over [0, n_max + p] plus exact block
    counts on the composite shifts {a_k, a_k +- a_l}.
    """
    n_max = min(n_max, alg.length - 1 - p)
    rho = fast_rho(alg, n_max + p, threads) if n_max >= 1 else np.zeros(p + 1)
    sparse = [n for n in composite_shifts(alg) if n > n_max and n + p < alg.length]
    co = {}
    if sparse:
        pts = sorted({m for n in sparse for m in (n - p, n, n + p) if 0 <= m < alg.length})
        co = dict(zip(pts, (block_coincidences(alg, pts) / float(alg.hist[0])).tolist()))

    def r(m):
        if m < 0:
            m = -m
        return float(rho[m]) if m < len(rho) else co.get(m, 0.0)

    def proxy(n):
        if p == 0:
            return abs(r(n) - 1.0)
        return abs(r(n) - 0.5) + min(abs(r(n + p) - 0.5), abs(r(n - p) - 0.5))

    pool = list(range(1, n_max + 1)) + sparse
    ranked = sorted(pool, key=lambda n: (proxy(n), n))
    return ranked[:size]


def polynomial_limit_search(
    alg: LevelAlgebra,
    p: int,
    search: Sequence[int] | None = None,
    K: int | None = None,
    use_theta: bool = True,
    threads: int | None = None,
) -> tuple[int, WeakLimitFit]:
    """Find n in the search set whose fit is closest to (I + T^{+-p}) / 2.

    score = residual + |alpha_0 - 1/2| + |alpha_{+-p} - 1/2| (best sign);
    for p = 0 the target is I and the score is residual + |alpha_0 - 1|.
    """
    if p < 0:
        raise AnalysisError("p must be >= 0")
    K = p + 2 if K is None else K
    if p > K:
        raise AnalysisError(f"p = {p} exceeds the dictionary half-width K = {K}")
    if search is None:
        search = poly_search_set(alg, p, threads=threads)
    search = list(search)
    if not search:
        raise AnalysisError("empty search set")
    best = None
    for n in search:
        f = fit_shift(alg, n, K, use_theta)
        score, sign = poly_score(f, p)
        f.convention = f"T^{n} ~ (I + T^{sign * p})/2"
        if best is None or score < best[0]:
            best = (score, n, f)
    return best[1], best[2]


def report_json(payload: dict) -> str:
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"
