import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from pytest import raises

from ascg.errors import DimensionMismatch, NonFinite
from ascg.util import (
    affine_rank,
    as_matrix,
    as_vector,
    first_minimizer,
    intersection,
    lexicographic_order,
    spawn_rngs,
    unique_points,
)


def test_as_vector():
    assert as_vector(2.0).tolist() == [2.0]
    assert as_vector([1, 2], 2).dtype == float

    with raises(DimensionMismatch):
        as_vector([1.0, 2.0], 3)

    with raises(DimensionMismatch):
        as_vector([[1.0]])

    with raises(NonFinite):
        as_vector([1.0, np.nan])


def test_as_matrix():
    assert as_matrix([1.0, 2.0], cols=2).shape == (1, 2)

    with raises(DimensionMismatch):
        as_matrix([[1.0, 2.0]], rows=2)

    with raises(NonFinite):
        as_matrix([[np.inf]])


def test_intersection():
    a, b, c = (1, 2, 3, 4), (2, 3, 4, 5), (3, 4, 5, 6)

    assert tuple(intersection(a, b, c)) == (3, 4)


def test_unique_points():
    points = np.array([[0.0, 0.0], [1.0, 0.0], [1e-12, 0.0], [1.0, 0.0]])
    assert unique_points(points) == [0, 1]
    assert unique_points(points, tol=0.0) == [0, 1, 2]


def test_lexicographic_order():
    points = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 5.0]])
    assert lexicographic_order(points).tolist() == [3, 2, 1, 0]
    assert lexicographic_order(np.zeros((0, 2))).tolist() == []


def test_affine_rank():
    assert affine_rank(np.array([[1.0, 1.0]])) == 0
    assert affine_rank(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])) == 1
    assert affine_rank(np.eye(3)) == 2


def test_first_minimizer():
    assert first_minimizer([2.0, 1.0, 1.0 + 1e-14]) == 1
    assert first_minimizer([2.0, 1.0 + 1e-14, 1.0], tol=1e-12) == 1
    assert first_minimizer([2.0, 1.0 + 1e-14, 1.0]) == 2


@given(st.integers(min_value=0, max_value=2 ** 32))
def test_spawn_rngs_deterministic(seed):
    first = [r.standard_normal(3) for r in spawn_rngs(seed, 2)]
    second = [r.standard_normal(3) for r in spawn_rngs(seed, 2)]
    assert all(np.array_equal(x, y) for x, y in zip(first, second))
    assert not np.array_equal(first[0], first[1])
