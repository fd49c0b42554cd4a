from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rank1lab.construction import ConstructionError, preset
from rank1lab.correlation import LevelAlgebra
from rank1lab.spectral import (
    fejer_periodogram,
    inner_product,
    mean,
    spectral_sequence,
    zero_mean_function,
)
from rank1lab.words import SPACER


@pytest.fixture(scope="module")
def classical1():
    return LevelAlgebra(preset("classical"), 1, 8)


def test_classical_example(classical1):
    g = zero_mean_function(classical1, 0)
    assert g[0] == F(3, 5) and g[1] == F(-2, 5) and g[SPACER] == F(-2, 5)
    assert mean(classical1, g) == 0
    assert inner_product(classical1, g) == F(6, 25)
    seq = spectral_sequence(classical1, g, 50, mode="exact")
    assert seq.c_exact[0] == F(6, 25)


@given(st.sampled_from(["classical", "root", "linear", "prime", "log"]), st.integers(1, 3), st.data())
@settings(max_examples=25, deadline=None)
def test_variance_identity(name, j, data):
    alg = LevelAlgebra(preset(name), j, j + 2)
    a = data.draw(st.integers(0, alg.A - 1))
    g = zero_mean_function(alg, a)
    mu = alg.level_width / alg.total
    assert mean(alg, g) == 0
    assert inner_product(alg, g) == mu * (1 - mu)


def test_infinite_measure_rejected():
    with pytest.raises(ConstructionError):
        zero_mean_function(LevelAlgebra(preset("selfsim:4"), 1, 4), 0)


def test_n_equals_one(classical1):
    seq = spectral_sequence(classical1, zero_mean_function(classical1, 1), 1, mode="exact")
    assert np.allclose(seq.periodogram, seq.c[0])
    assert seq.cesaro == 1.0


def test_symmetry_and_bounds(classical1):
    seq = spectral_sequence(classical1, zero_mean_function(classical1, 0), 500)
    for n in (1, 7, 100):
        assert seq.at(-n) == seq.at(n)
    assert (np.abs(seq.c) <= seq.c[0] + seq.err + 1e-15).all()
    assert seq.err[0] == 0


def test_exact_fast_agree():
    alg = LevelAlgebra(preset("root"), 2, 11)
    g = zero_mean_function(alg, 3)
    ex = spectral_sequence(alg, g, 1000, mode="exact")
    fa = spectral_sequence(alg, g, 1000, mode="fast")
    assert np.abs(ex.c - fa.c).max() <= 1e-6 * ex.c[0]


def test_periodogram_mass():
    alg = LevelAlgebra(preset("linear"), 2, 10)
    seq = spectral_sequence(alg, zero_mean_function(alg, 0), 4000)
    assert seq.periodogram_integral() == pytest.approx(seq.c[0], rel=1e-3)
    assert seq.periodogram.min() >= -1e-3 * seq.c[0]


def test_fejer_against_direct_sum():
    rng = np.random.default_rng(0)
    c = rng.normal(size=40)
    theta, sig = fejer_periodogram(c, 40, grid=65)
    n = np.arange(1, 40)
    ref = [c[0] + 2 * np.sum((1 - n / 40) * c[1:] * np.cos(n * t)) for t in theta]
    assert np.allclose(sig, ref)


def test_classical_weak_mixing_statistic():
    alg = LevelAlgebra(preset("classical"), 2, 12)
    seq = spectral_sequence(alg, zero_mean_function(alg, 0), 10**4)
    assert seq.cesaro < 0.05


def test_csv_outputs(classical1):
    seq = spectral_sequence(classical1, zero_mean_function(classical1, 0), 5, grid=8)
    assert seq.sequence_csv().splitlines()[0] == "n,c_n,bound"
    assert len(seq.sequence_csv().splitlines()) == 7
    assert seq.periodogram_csv().splitlines()[0] == "theta,sigma"
    assert len(seq.periodogram_csv().splitlines()) == 9


def test_bad_N(classical1):
    with pytest.raises(ValueError):
        spectral_sequence(classical1, zero_mean_function(classical1, 0), 0)
