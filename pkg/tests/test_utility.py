import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from itervote.core import DimensionMismatch
from itervote.utility import (
    UtilityFunction,
    distance,
    pairwise_distances,
    repulsive_from_distance,
    utility_inverse,
    utility_repulsive,
)

# evaluation-scale values; squares of ~1e-160 would underflow to zero
coords = st.integers(-10**6, 10**6).map(lambda i: i / 1000)


def point(d=11):
    return arrays(float, d, elements=coords)


def at_distance(dist, d=11):
    v = np.zeros(d)
    c = np.zeros(d)
    c[0] = dist
    return v, c


def naive_distance(a, b):
    total = 0.0
    for x, y in zip(a, b):
        total += (x - y) ** 2
    return math.sqrt(total)


def test_distance_examples():
    assert distance(np.zeros(11), np.zeros(11)) == 0.0
    a = np.zeros(11)
    a[:2] = (3.0, 4.0)
    assert distance(a, np.zeros(11)) == 5.0


def test_distance_matches_naive_loop(rng):
    for _ in range(50):
        a, b = rng.uniform(-100, 100, size=(2, 11))
        assert distance(a, b) == pytest.approx(naive_distance(a, b), rel=1e-12)


def test_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatch) as err:
        distance(np.zeros(3), np.zeros(4))
    assert {err.value.left, err.value.right} == {3, 4}


def test_pairwise_matches_scalar(rng):
    p = rng.uniform(0, 100, size=(20, 5))
    c = rng.uniform(0, 100, size=(4, 5))
    dist = pairwise_distances(p, c)
    for i in range(20):
        for j in range(4):
            assert dist[i, j] == distance(p[i], c[j])


@given(point(), point())
def test_distance_symmetric_and_zero_iff_equal(a, b):
    assert distance(a, b) == distance(b, a)
    assert distance(a, a) == 0.0
    if not np.array_equal(a, b):
        assert distance(a, b) > 0


@given(point(), point(), point())
def test_triangle_inequality(a, b, c):
    assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9


def test_inverse_examples():
    assert utility_inverse(*at_distance(1.0)) == 1.0
    assert utility_inverse(*at_distance(2.0)) == 0.5
    assert utility_inverse(np.zeros(11), np.zeros(11), 1e-6) == pytest.approx(1e6, rel=1e-15)


def test_repulsive_examples():
    alpha = 50.0
    assert utility_repulsive(*at_distance(0.0), alpha) == alpha
    assert utility_repulsive(*at_distance(alpha), alpha) == 0.0
    # (50 - 100) / (1 + 100)^2
    assert utility_repulsive(*at_distance(100.0), alpha) == pytest.approx(-50 / 10201, abs=1e-12)
    assert -50 / 10201 == pytest.approx(-4.9015e-3, abs=1e-7)


@given(point(), point(), point())
def test_inverse_monotone(v, c1, c2):
    d1, d2 = distance(v, c1), distance(v, c2)
    if 1e-6 <= d1 < d2:
        assert utility_inverse(v, c1) > utility_inverse(v, c2)


@given(st.floats(0, 1e4), st.floats(0.1, 500))
def test_repulsive_sign(dist, alpha):
    u = float(repulsive_from_distance(dist, alpha))
    if dist != alpha:
        assert np.sign(u) == np.sign(alpha - dist)


@pytest.mark.parametrize("alpha", [1.0, 10.0, 50.0, 100.0])
def test_repulsive_decreasing_until_its_minimum(alpha):
    # d/dx (a - x)/(1 + x)^2 = (x - 1 - 2a)/(1 + x)^3: decreasing up to x = 2a + 1, rising after
    grid = np.arange(0, 301) * (alpha / 100)
    u = repulsive_from_distance(grid, alpha)
    falling = grid <= 2 * alpha + 1
    assert np.all(np.diff(u[falling]) < 0)
    assert np.all(np.diff(u[~falling]) > 0)
    assert np.all(u[~falling] < 0)


def test_utility_function_variants():
    v, c = at_distance(4.0)
    assert UtilityFunction.inverse()(v, c) == 0.25
    assert UtilityFunction.repulsive(4.0)(v, c) == 0.0
    with pytest.raises(ValueError):
        UtilityFunction.repulsive(0.0)
    with pytest.raises(ValueError):
        UtilityFunction("cosine")


@settings(max_examples=50)
@given(point(4))
def test_utility_vectorized_agrees(v):
    u = UtilityFunction.repulsive(30.0)
    cands = np.array([[0, 0, 0, 0], [10, 20, 30, 40], [-50, 5, 5, 5]], dtype=float)
    batch = u.from_distance(pairwise_distances(v[None, :], cands))[0]
    for j, c in enumerate(cands):
        assert batch[j] == u(v, c)
