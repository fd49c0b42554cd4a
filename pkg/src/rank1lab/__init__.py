"""Exact simulation and finite-scale analysis of Chacon-type rank-one maps."""

__version__ = "0.1.0"

from .construction import (  # noqa: E402
    ConstructionError,
    ConstructionSpec,
    classify_measure,
    heights,
    preset,
    stage_summaries,
)
from .correlation import LevelAlgebra, autocorrelation_batch, correlation_matrix  # noqa: E402
from .geometry import build_tower_map, orbit_code  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .limits import (  # noqa: E402
    fit_best_convention,
    fit_shift,
    fit_weak_limit,
    kappa_distance,
    polynomial_limit_search,
    rigidity_scan,
)
from .spacers import SpacerSpec  # noqa: E402
from .spectral import spectral_sequence, zero_mean_function  # noqa: E402
from .words import CapExceeded, Word, expand_word  # noqa: E402

__all__ = [
    "BACKEND",
    "CapExceeded",
    "ConstructionError",
    "ConstructionSpec",
    "LevelAlgebra",
    "SpacerSpec",
    "Word",
    "autocorrelation_batch",
    "build_tower_map",
    "classify_measure",
    "correlation_matrix",
    "expand_word",
    "fit_best_convention",
    "fit_shift",
    "fit_weak_limit",
    "heights",
    "kappa_distance",
    "orbit_code",
    "polynomial_limit_search",
    "preset",
    "rigidity_scan",
    "spectral_sequence",
    "stage_summaries",
    "zero_mean_function",
]
