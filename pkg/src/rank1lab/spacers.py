"""Spacer sequence families s_j.

Each family maps a stage index j >= 1 to a nonnegative integer.  The memory
family needs the tower sizes of earlier stages, so :func:`spacer_value`
accepts them as an optional argument.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FAMILIES = (
    "constant",
    "root",
    "log",
    "linear",
    "poly",
    "expo",
    "prime",
    "selfsim",
    "memory",
    "custom",
)


class SpacerError(ValueError):
    """Raised when a spacer value cannot be produced."""


# --------------------------------------------------------------------------
# primes
# --------------------------------------------------------------------------

_PRIME_CACHE = np.array([2, 3, 5, 7, 11, 13], dtype=np.int64)


def primes_upto(limit: int) -> np.ndarray:
    """Sieve of Eratosthenes; all primes <= limit."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


def nth_prime(k: int) -> int:
    """Return p(k), the k-th prime (p(1) = 2)."""
    global _PRIME_CACHE
    if k < 1:
        raise SpacerError(f"prime index must be >= 1, got {k}")
    if k > len(_PRIME_CACHE):
        # Rosser's bound p(k) < k (ln k + ln ln k) for k >= 6
        bound = max(15, int(k * (math.log(k) + math.log(math.log(k)))) + 1)
        _PRIME_CACHE = primes_upto(bound)
    return int(_PRIME_CACHE[k - 1])


# --------------------------------------------------------------------------
# memory rules
# --------------------------------------------------------------------------

_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Name,
    ast.Constant,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.FloorDiv,
    ast.Mod,
    ast.USub,
    ast.Call,
    ast.Load,
)


def compile_rule(rule: str):
    """Compile an integer expression in ``j`` (e.g. ``"j-1"``, ``"j//2"``).

    Only integer arithmetic, ``min``, ``max`` and ``isqrt`` are allowed.
    """
    try:
        tree = ast.parse(rule, mode="eval")
    except SyntaxError as exc:
        raise SpacerError(f"bad memory rule {rule!r}: {exc}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise SpacerError(f"memory rule {rule!r}: {type(node).__name__} not allowed")
        if isinstance(node, ast.Name) and node.id not in ("j", "min", "max", "isqrt"):
            raise SpacerError(f"memory rule {rule!r}: unknown name {node.id!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, int):
            raise SpacerError(f"memory rule {rule!r}: only integer constants")
        if isinstance(node, ast.Call) and not (
            isinstance(node.func, ast.Name) and node.func.id in ("min", "max", "isqrt")
        ):
            raise SpacerError(f"memory rule {rule!r}: unsupported call")
    code = compile(tree, "<memory-rule>", "eval")
    env = {"__builtins__": {}, "min": min, "max": max, "isqrt": math.isqrt}

    def m(j: int) -> int:
        return int(eval(code, env, {"j": j}))

    return m


# --------------------------------------------------------------------------
# SpacerSpec
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpacerSpec:
    """Recipe for the spacer sequence.

    ``param`` holds the family parameter: the constant ``c``, the exponent
    ``m`` of ``poly``, the base ``b`` of ``expo``, ``n`` of ``selfsim``, or
    the rule string of ``memory``.  ``offset`` shifts the index fed to the
    family formula: s_j = f(j + offset).
    """

    family: str
    param: int | str | None = None
    offset: int = 0
    values: tuple[int, ...] = field(default=())
    repeat_last: bool = False
    memory_initial: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpacerError(f"unknown spacer family {self.family!r}")
        if self.family == "constant" and (not isinstance(self.param, int) or self.param < 0):
            raise SpacerError("constant family needs an integer c >= 0")
        if self.family == "poly" and (not isinstance(self.param, int) or self.param < 0):
            raise SpacerError("poly family needs an integer exponent m >= 0")
        if self.family == "expo" and (not isinstance(self.param, int) or self.param < 1):
            raise SpacerError("expo family needs an integer base b >= 1")
        if self.family == "selfsim" and (not isinstance(self.param, int) or self.param <= 3):
            raise SpacerError("selfsim family needs n > 3")
        if self.family == "memory":
            if not isinstance(self.param, str):
                raise SpacerError("memory family needs a rule string")
            compile_rule(self.param)
        if self.family == "custom":
            if any((not isinstance(v, int)) or v < 0 for v in self.values):
                raise SpacerError("custom spacers must be nonnegative integers")
            if not self.values:
                raise SpacerError("custom spacer list is empty")

    @property
    def needs_heights(self) -> bool:
        return self.family == "memory"

    def label(self) -> str:
        if self.family in ("root", "log", "linear", "prime"):
            return self.family
        if self.family == "custom":
            return f"custom[{len(self.values)}]"
        return f"{self.family}:{self.param}"


def spacer_value(spec: SpacerSpec, j: int, a_values: Sequence[int] | None = None) -> int:
    """Return s_j for the given family.

    Parameters
    ----------
    spec : SpacerSpec
    j : int
        Stage index, j >= 1.
    a_values : sequence of int, optional
        Tower sizes a_1, ..., a_{j-1} (a_k = h_k + 1).  Only used by the
        memory family, which returns h_{m(j)} = a_{m(j)} - 1.
    """
    if j < 1:
        raise SpacerError(f"stage index must be >= 1, got {j}")
    k = j + spec.offset
    fam = spec.family
    if fam == "custom":
        idx = k - 1
        if idx < 0:
            raise SpacerError(f"custom index {k} out of range")
        if idx >= len(spec.values):
            if not spec.repeat_last:
                raise SpacerError(
                    f"custom spacer list has {len(spec.values)} entries; stage {k} requested"
                )
            return spec.values[-1]
        return spec.values[idx]
    if k < 1:
        raise SpacerError(f"offset index {k} < 1 for family {fam}")
    if fam == "constant":
        return spec.param
    if fam == "root":
        return math.isqrt(k)
    if fam == "log":
        # ln k is irrational for k > 1, so the float floor only needs a
        # guard against rounding at the e^m boundaries
        m = int(math.log(k))
        if math.exp(m + 1) <= k:
            m += 1
        elif m > 0 and math.exp(m) > k:
            m -= 1
        return m
    if fam == "linear":
        return k
    if fam == "poly":
        return k ** spec.param
    if fam == "expo":
        return spec.param**k
    if fam == "prime":
        return nth_prime(k)
    if fam == "selfsim":
        n = spec.param
        return 1 if k == 1 else n**k - 3 * n ** (k - 1)
    if fam == "memory":
        m = compile_rule(spec.param)(j)
        if m < 1:
            return spec.memory_initial
        if m >= j:
            raise SpacerError(f"memory rule m({j}) = {m} must reference an earlier stage")
        if a_values is None or len(a_values) < m:
            raise SpacerError("memory family needs tower sizes of earlier stages")
        return int(a_values[m - 1]) - 1
    raise SpacerError(f"unhandled family {fam!r}")  # pragma: no cover


def read_custom_file(path, repeat_last: bool = False) -> SpacerSpec:
    """Read a custom spacer file: one nonnegative integer per line, '#' comments."""
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                v = int(text)
            except ValueError:
                raise SpacerError(f"{path}:{lineno}: not an integer: {text!r}") from None
            if v < 0:
                raise SpacerError(f"{path}:{lineno}: negative spacer count {v}")
            values.append(v)
    return SpacerSpec("custom", values=tuple(values), repeat_last=repeat_last)
