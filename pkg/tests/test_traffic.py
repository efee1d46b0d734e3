import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wanqubo.traffic import (
    Demand,
    DemandSet,
    discretize,
    load_demands,
    ordered_pairs,
    sample_demands,
    save_demands,
)


def test_pairs_are_lexicographic(triangle):
    assert ordered_pairs(triangle) == [(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)]


def test_seeded_draw(triangle):
    ds = sample_demands(triangle, 75, 10, 42)
    ref = np.random.default_rng(42).normal(75, 10, size=6)
    assert len(ds) == 6
    assert [d.pair for d in ds] == ordered_pairs(triangle)
    assert np.array_equal([d.volume_gbps for d in ds], ref)
    assert ds == sample_demands(triangle, 75, 10, 42)
    assert ds != sample_demands(triangle, 75, 10, 43)


def test_zero_sigma_is_constant(triangle):
    ds = sample_demands(triangle, 75, 0, 1)
    assert all(d.volume_gbps == 75.0 for d in ds)


def test_negative_draws_are_clipped(triangle):
    vols = [d.volume_gbps for d in sample_demands(triangle, 1, 1000, 0)]
    assert min(vols) >= 0.0
    assert 0.0 in vols


@pytest.mark.parametrize("mu,sigma", [(0, 1), (-5, 1), (75, -1)])
def test_bad_distribution(triangle, mu, sigma):
    with pytest.raises(ValueError):
        sample_demands(triangle, mu, sigma, 0)


def test_demand_validation():
    with pytest.raises(ValueError):
        Demand(1, 1, 10)
    with pytest.raises(ValueError):
        Demand(1, 2, -1)
    with pytest.raises(ValueError):
        DemandSet((Demand(1, 2, 1), Demand(1, 2, 3)))


@pytest.mark.parametrize(
    "volume,xi,a,expected",
    [
        (76, 100, 1, Fraction(1)),
        (75, 100, 2, Fraction(3, 4)),
        (75, 100, 1, Fraction(1)),
        (50, 100, 1, Fraction(1, 2)),
        (0, 100, 3, Fraction(0)),
        (101, 100, 0, Fraction(2)),
        (100, 100, 5, Fraction(1)),
    ],
)
def test_discretize_examples(volume, xi, a, expected):
    assert discretize(volume, xi, a) == expected


@given(
    st.floats(0, 1000, allow_nan=False),
    st.floats(1, 400, allow_nan=False),
    st.integers(0, 8),
)
def test_discretize_properties(volume, xi, a):
    h = discretize(volume, xi, a)
    exact = Fraction(volume) / Fraction(xi)
    assert h >= exact
    assert h - exact < Fraction(1, 2**a)
    assert (h * 2**a).denominator == 1


def test_discretize_rejects_bad_args():
    with pytest.raises(ValueError):
        discretize(10, 0, 1)
    with pytest.raises(ValueError):
        discretize(10, 100, -1)


def test_round_trip(tmp_path, demands3):
    path = tmp_path / "d.json"
    save_demands(demands3, path)
    back = load_demands(path)
    assert back == demands3
    assert back.subset(2).demands == demands3.demands[:2]


def test_volumes_near_mean(demands3):
    vols = np.array([d.volume_gbps for d in demands3])
    assert np.all(np.abs(vols - 75) < 4 * 10)
    assert not math.isclose(vols.std(), 0.0)
