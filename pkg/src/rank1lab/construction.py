"""Construction recipes, exact stage arithmetic and measure classification.

All tower arithmetic uses a_j = h_j + 1, the number of levels of the stage-j
tower E_j, T E_j, ..., T^{h_j} E_j.  Heights are Python ints and widths are
:class:`fractions.Fraction`, so nothing here rounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .spacers import SpacerError, SpacerSpec, read_custom_file, spacer_value

SLOT = "s"

Template = tuple  # entries: int >= 0 or SLOT


class ConstructionError(ValueError):
    """Invalid construction recipe."""


def _check_template(template: Template, r: int) -> None:
    if len(template) != r:
        raise ConstructionError(f"placement {template!r} has length {len(template)}, expected r={r}")
    if sum(1 for x in template if x == SLOT) != 1:
        raise ConstructionError(f"placement {template!r} needs exactly one spacer slot")
    for x in template:
        if x != SLOT and (not isinstance(x, int) or x < 0):
            raise ConstructionError(f"placement {template!r}: counts must be ints >= 0")


@dataclass(frozen=True)
class ConstructionSpec:
    """A rank-one recipe: h_1, cut counts r_j, spacer placement and s_j.

    ``cuts`` is either a constant r or a tuple (r_1, r_2, ...); likewise
    ``placement`` is one template or a tuple of per-stage templates.  A
    template has one entry per column, each a count >= 0 or :data:`SLOT`,
    the column that receives s_j.
    """

    spacer: SpacerSpec
    h1: int = 1
    cuts: Union[int, tuple] = 3
    placement: tuple = (0, SLOT, 0)
    w1: Fraction = Fraction(1)
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.h1, int) or self.h1 < 1:
            raise ConstructionError("h1 must be an integer >= 1")
        object.__setattr__(self, "w1", Fraction(self.w1))
        if self.w1 <= 0:
            raise ConstructionError("w1 must be positive")
        if isinstance(self.cuts, int):
            if self.cuts < 2:
                raise ConstructionError("cut count r must be >= 2")
        elif not self.cuts or any((not isinstance(r, int)) or r < 2 for r in self.cuts):
            raise ConstructionError("per-stage cut counts must be integers >= 2")
        templates = self._templates()
        if not isinstance(self.cuts, int) and len(templates) < len(self.cuts):
            raise ConstructionError("need one placement template per stage")
        for j, t in enumerate(templates, 1):
            _check_template(t, self.r(j))

    def _templates(self) -> Sequence[Template]:
        if self.placement and isinstance(self.placement[0], tuple):
            return self.placement
        if isinstance(self.cuts, int):
            return [self.placement]
        return [self.placement] * len(self.cuts)

    @property
    def constant_r(self) -> int | None:
        return self.cuts if isinstance(self.cuts, int) else None

    def r(self, j: int) -> int:
        if isinstance(self.cuts, int):
            return self.cuts
        if j > len(self.cuts):
            raise ConstructionError(f"no cut count given for stage {j}")
        return self.cuts[j - 1]

    def template(self, j: int) -> Template:
        if not isinstance(self.placement[0], tuple):
            return self.placement
        templates = self._templates()
        if j > len(templates):
            raise ConstructionError(f"no placement template for stage {j}")
        return templates[j - 1]

    def spacers(self, j: int, a_values: Sequence[int] | None = None) -> tuple[int, ...]:
        """Instantiate the stage-j placement: one spacer count per column."""
        s = spacer_value(self.spacer, j, a_values)
        return tuple(s if x == SLOT else x for x in self.template(j))

    @property
    def label(self) -> str:
        return self.name or f"custom-recipe({self.spacer.label()})"

    def to_dict(self) -> dict:
        sp = self.spacer
        return {
            "name": self.label,
            "h1": self.h1,
            "cuts": self.cuts if isinstance(self.cuts, int) else list(self.cuts),
            "placement": [x if x != SLOT else "s" for x in self.placement]
            if not (self.placement and isinstance(self.placement[0], tuple))
            else [[x for x in t] for t in self.placement],
            "w1": f"{self.w1.numerator}/{self.w1.denominator}",
            "spacer": {
                "family": sp.family,
                "param": sp.param,
                "offset": sp.offset,
                "repeat_last": sp.repeat_last,
                "n_values": len(sp.values),
            },
        }


@dataclass(frozen=True)
class StageSummary:
    """Exact data of the stage-j tower."""

    j: int
    spacers: tuple[int, ...]
    a: int
    w: Fraction
    cum_measure: Fraction
    tail_bound: Union[Fraction, str, None] = None

    @property
    def h(self) -> int:
        return self.a - 1

    @property
    def s(self) -> int:
        return sum(self.spacers)


# --------------------------------------------------------------------------
# stage arithmetic
# --------------------------------------------------------------------------


def heights(spec: ConstructionSpec, J: int) -> list[int]:
    """Return [a_1, ..., a_J] (a_j = h_j + 1)."""
    if J < 1:
        raise ConstructionError("J must be >= 1")
    a = [spec.h1 + 1]
    for j in range(1, J):
        s = spec.spacers(j, a)
        a.append(spec.r(j) * a[-1] + sum(s))
    return a


def stage_summaries(spec: ConstructionSpec, J: int, probe: int = 64) -> list[StageSummary]:
    """Summaries for stages 1..J with exact integer/rational arithmetic.

    ``tail_bound`` is the upper bound on measure added after stage j taken
    from :func:`classify_measure` (``"divergent"`` for infinite measure,
    ``None`` when undetermined).
    """
    if J < 1:
        raise ConstructionError("J must be >= 1")
    try:
        verdict = classify_measure(spec, max(probe, J + 1))
    except SpacerError:
        verdict = None
    out: list[StageSummary] = []
    a_vals = [spec.h1 + 1]
    w = spec.w1
    for j in range(1, J + 1):
        a = a_vals[-1]
        s = spec.spacers(j, a_vals)
        cum = a * w
        if verdict is None or verdict.kind == "undetermined":
            tail = None
        elif verdict.kind == "infinite":
            tail = "divergent"
        else:
            tail = verdict.upper - cum
        out.append(StageSummary(j, s, a, w, cum, tail))
        if j < J:
            r = spec.r(j)
            a_next = r * a + sum(s)
            assert a_next == r * a_vals[-1] + sum(s)
            a_vals.append(a_next)
            w = w / r
    return out


# --------------------------------------------------------------------------
# measure classification
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasureClass:
    """Verdict on the total measure a_1 w_1 + sum_k (sum_i s_k(i)) w_{k+1}.

    For ``finite`` the true total lies in [lower, upper]; ``exact`` marks a
    geometric tail summed in closed form, in which case ``upper`` is the total.
    """

    kind: str
    lower: Fraction | None = None
    upper: Fraction | None = None
    exact: bool = False
    probe: int = 0
    ratio_min: float | None = None
    ratio_max: float | None = None

    @property
    def total(self) -> Fraction | None:
        if self.kind == "finite" and self.exact:
            return self.upper
        return None

    @property
    def finite(self) -> bool:
        return self.kind == "finite"

    def normalizer(self) -> Fraction:
        """Exact total when known, otherwise the midpoint of the bracket."""
        if self.kind != "finite":
            raise ConstructionError(f"measure is {self.kind}; no normalization")
        if self.exact:
            return self.upper
        return (self.lower + self.upper) / 2

    def to_dict(self) -> dict:
        def q(x):
            return None if x is None else f"{x.numerator}/{x.denominator}"

        return {
            "verdict": self.kind,
            "lower": q(self.lower),
            "upper": q(self.upper),
            "exact": self.exact,
            "probe": self.probe,
            "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max,
        }


def measure_terms(spec: ConstructionSpec, K: int) -> tuple[Fraction, list[Fraction]]:
    """Return a_1 w_1 and the added-mass terms t_k = (sum_i s_k(i)) w_{k+1}, k = 1..K."""
    a_vals = [spec.h1 + 1]
    w = spec.w1
    base = a_vals[0] * w
    terms = []
    for k in range(1, K + 1):
        s = sum(spec.spacers(k, a_vals))
        r = spec.r(k)
        w = w / r
        terms.append(s * w)
        a_vals.append(r * a_vals[-1] + s)
    return base, terms


def classify_measure(spec: ConstructionSpec, K: int = 64) -> MeasureClass:
    """Classify the total measure by a ratio test on the last K//2 terms.

    Ratios persistently >= 1 over the window give ``infinite``; ratios
    bounded by q < 1 give ``finite`` with the tail bounded by
    t_K q / (1 - q); a constant ratio is summed in closed form.
    """
    if K < 1:
        raise ConstructionError("probe depth must be >= 1")
    base, terms = measure_terms(spec, K + 1)
    partial = base + sum(terms[:K], Fraction(0))
    window = terms[K - max(1, K // 2) : K + 1]
    if all(t == 0 for t in window):
        if spec.spacer.family == "constant" and spec.spacer.param == 0:
            return MeasureClass("finite", partial, partial, True, K, 0.0, 0.0)
        return MeasureClass("undetermined", probe=K)
    if any(t == 0 for t in window):
        return MeasureClass("undetermined", probe=K)
    ratios = [window[i + 1] / window[i] for i in range(len(window) - 1)]
    rmin, rmax = min(ratios), max(ratios)
    if rmin >= 1:
        return MeasureClass("infinite", probe=K, ratio_min=float(rmin), ratio_max=float(rmax))
    if rmax < 1:
        q = rmax
        t_last = terms[K - 1]
        upper = partial + t_last * q / (1 - q)
        exact = rmin == rmax
        return MeasureClass("finite", partial, upper, exact, K, float(rmin), float(rmax))
    return MeasureClass("undetermined", probe=K, ratio_min=float(rmin), ratio_max=float(rmax))


# --------------------------------------------------------------------------
# presets
# --------------------------------------------------------------------------

PRESET_NAMES = (
    "classical",
    "root",
    "log",
    "linear",
    "poly:<m>",
    "expo:<b>",
    "prime",
    "selfsim:<n>",
    "2adic-classical",
    "2adic-root",
    "2adic-linear",
    "2adic-poly:<m>",
    "2adic-expo",
    "2adic-prime",
    "memory:<rule>",
    "custom:<path>",
)


def _int_param(name: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConstructionError(f"preset {name!r}: parameter {text!r} is not an integer") from None


def preset(name: str, repeat_last: bool = False) -> ConstructionSpec:
    """Build a ConstructionSpec from a preset name such as ``"poly:2"``."""
    base, _, arg = name.partition(":")
    r, placement = 3, (0, SLOT, 0)
    fam = base
    if base.startswith("2adic-"):
        r, placement = 2, (0, SLOT)
        fam = base[len("2adic-") :]
        if fam not in ("classical", "root", "linear", "poly", "expo", "prime", "log"):
            raise ConstructionError(f"unknown preset {name!r}")
    try:
        if fam == "classical":
            sp = SpacerSpec("constant", 1)
        elif fam in ("root", "log", "linear", "prime"):
            sp = SpacerSpec(fam)
        elif fam == "poly":
            sp = SpacerSpec("poly", _int_param(name, arg))
        elif fam == "expo":
            sp = SpacerSpec("expo", _int_param(name, arg) if arg else 2)
        elif fam == "selfsim" and r == 3:
            sp = SpacerSpec("selfsim", _int_param(name, arg))
        elif fam == "memory" and r == 3:
            if not arg:
                raise ConstructionError("memory preset needs a rule, e.g. memory:j-1")
            sp = SpacerSpec("memory", arg)
        elif fam == "custom" and r == 3:
            if not arg:
                raise ConstructionError("custom preset needs a file path")
            sp = read_custom_file(arg, repeat_last=repeat_last)
        else:
            raise ConstructionError(f"unknown preset {name!r}")
    except SpacerError as exc:
        raise ConstructionError(str(exc)) from None
    return ConstructionSpec(spacer=sp, cuts=r, placement=placement, name=name)
