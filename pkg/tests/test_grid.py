import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cldice.grid import (
    binary_mask,
    footprint,
    neighbors,
    offsets,
    scalar_field,
    threshold,
)


def test_threshold_examples():
    assert threshold(np.full((3, 3), 0.7), 0.5).all()
    f = np.random.default_rng(0).random((4, 5))
    assert threshold(f, 0.0).all()
    np.testing.assert_array_equal(threshold(np.array([[0.2, 0.5, 0.8]]), 0.5), [[0, 1, 1]])


def test_threshold_hard_field_identity():
    m = np.random.default_rng(1).random((6, 6)) < 0.4
    np.testing.assert_array_equal(threshold(m.astype(float), 0.5), m)


def test_threshold_rejects_bad_t():
    with pytest.raises(ValueError):
        threshold(np.zeros((2, 2)), 1.5)


@given(arrays(np.float64, (5, 4), elements=st.floats(0, 1)), st.floats(0, 1), st.floats(0, 1))
def test_threshold_monotone(f, t1, t2):
    lo, hi = sorted((t1, t2))
    assert not np.any(threshold(f, hi) & ~threshold(f, lo))


def test_scalar_field_validation():
    with pytest.raises(ValueError):
        scalar_field(np.full((2, 2), 1.2))
    with pytest.raises(ValueError):
        scalar_field(np.zeros(4))
    with pytest.raises(ValueError):
        scalar_field(np.array([[np.nan, 0.0]]))
    assert scalar_field([[0.0, 1.0]]).dtype == np.float64


def test_binary_mask_validation():
    with pytest.raises(ValueError):
        binary_mask(np.array([[0, 2]]))
    assert binary_mask(np.array([[0, 1]])).dtype == bool


@pytest.mark.parametrize(
    "idx,conn,dims,expected",
    [((1, 1), 4, (3, 3), 4), ((0, 0), 8, (3, 3), 3), ((1, 1, 1), 26, (3, 3, 3), 26),
     ((1, 1, 1), 6, (3, 3, 3), 6), ((1, 1, 1), 18, (3, 3, 3), 18), ((0, 0, 0), 26, (3, 3, 3), 7)],
)
def test_neighbor_counts(idx, conn, dims, expected):
    assert len(neighbors(idx, conn, dims)) == expected


def test_neighbors_sorted_and_bounds():
    nb = neighbors((1, 1), 8, (3, 3))
    assert nb == sorted(nb)
    with pytest.raises(IndexError):
        neighbors((3, 0), 4, (3, 3))
    with pytest.raises(ValueError):
        neighbors((1, 1), 6, (3, 3))


@settings(max_examples=50)
@given(st.sampled_from([(2, 4), (2, 8), (3, 6), (3, 18), (3, 26)]), st.data())
def test_neighbors_symmetric(ndim_conn, data):
    ndim, conn = ndim_conn
    dims = (5,) * ndim
    a = tuple(data.draw(st.integers(1, 3)) for _ in range(ndim))
    for b in neighbors(a, conn, dims):
        assert a in neighbors(b, conn, dims)


def test_footprint_sizes():
    assert footprint(2, 4).sum() == 5
    assert footprint(3, 26).sum() == 27
    assert len(offsets(3, 18)) == 18
