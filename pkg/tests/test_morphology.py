import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cldice.morphology import (
    inscribed_radius,
    soft_dilate,
    soft_dilate_cross,
    soft_erode,
    soft_open,
    soft_skeleton,
    soft_skeleton_relu_form,
    thin_skeletonize,
)
from cldice.topology import betti_numbers, betti_oracle
from cldice.trainer import gen_synthetic_tubes

from conftest import disk, hline, ring2d
from oracles import dilate_loops, erode_loops, soft_skel_loops

fields2d = arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 7)), elements=st.floats(0, 1))
fields3d = arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4)),
                  elements=st.floats(0, 1))


def block5():
    f = np.zeros((5, 5))
    f[1:4, 1:4] = 1
    return f


def center5():
    f = np.zeros((5, 5))
    f[2, 2] = 1
    return f


def test_erode_examples():
    assert not soft_erode(np.zeros((5, 5))).any()
    np.testing.assert_array_equal(soft_erode(block5()), center5())
    assert not soft_erode(center5()).any()


def test_dilate_examples():
    assert soft_dilate(np.ones((5, 5))).all()
    np.testing.assert_array_equal(soft_dilate(center5()), block5())
    assert not soft_dilate(np.zeros((4, 4, 4))).any()


def test_open_examples():
    np.testing.assert_array_equal(soft_open(block5()), block5())
    assert not soft_open(hline().astype(float)).any()
    assert soft_open(np.ones((4, 4))).all()


@settings(max_examples=60)
@given(st.one_of(fields2d, fields3d))
def test_pooling_matches_loop_oracle(f):
    np.testing.assert_array_equal(soft_erode(f), erode_loops(f))
    np.testing.assert_array_equal(soft_dilate(f), dilate_loops(f))


@settings(max_examples=60)
@given(st.one_of(fields2d, fields3d))
def test_erode_dilate_duality(f):
    np.testing.assert_allclose(soft_erode(f), 1.0 - soft_dilate_cross(1.0 - f), atol=1e-15)


@settings(max_examples=40)
@given(st.one_of(fields2d, fields3d), st.data())
def test_monotonicity(f, data):
    bump = data.draw(arrays(np.float64, f.shape, elements=st.floats(0, 1)))
    g = np.minimum(1.0, f + bump)
    for op in (soft_erode, soft_dilate, soft_open):
        assert np.all(op(f) <= op(g))
    assert np.all(soft_erode(f) <= f)
    assert np.all(soft_dilate(f) >= f)


def test_soft_skeleton_monotone_on_binary_pairs(rng):
    # on binary inputs the soft skeleton is monotone in the sense of support:
    # its output stays inside the input for both members of a nested pair
    for _ in range(30):
        f = (rng.random((8, 8)) < 0.5).astype(float)
        g = np.maximum(f, (rng.random((8, 8)) < 0.3))
        for x in (f, g):
            assert np.all(soft_skeleton(x, 3) <= x)


def test_soft_skeleton_examples():
    line = hline().astype(float)
    for k in (0, 1, 4):
        np.testing.assert_array_equal(soft_skeleton(line, k), line)
    for k in (1, 2, 6):
        np.testing.assert_array_equal(soft_skeleton(block5(), k), center5())
    assert not soft_skeleton(np.zeros((6, 6)), 3).any()


@settings(max_examples=40)
@given(st.one_of(fields2d, fields3d), st.integers(0, 4))
def test_soft_skeleton_matches_loop_oracle_and_update_forms(f, k):
    s = soft_skeleton(f, k)
    np.testing.assert_allclose(s, soft_skel_loops(f, k), atol=1e-12)
    np.testing.assert_allclose(s, soft_skeleton_relu_form(f, k), atol=1e-12)
    assert s.min() >= 0 and s.max() <= 1


@settings(max_examples=40)
@given(st.one_of(arrays(bool, (6, 7)), arrays(bool, (4, 4, 4))), st.integers(0, 4))
def test_soft_skeleton_binary_closure(m, k):
    s = soft_skeleton(m.astype(float), k)
    assert set(np.unique(s)) <= {0.0, 1.0}
    assert not np.any((s > 0) & ~m)


@pytest.mark.parametrize("seed", range(6))
def test_soft_skeleton_saturates_at_inscribed_radius(seed):
    label = gen_synthetic_tubes(seed, size=48, radius_range=(1, 4)).label.astype(float)
    r = inscribed_radius(label)
    ref = soft_skeleton(label, r)
    for extra in (1, 3, 7):
        np.testing.assert_array_equal(soft_skeleton(label, r + extra), ref)


def test_inscribed_radius():
    assert inscribed_radius(np.zeros((4, 4))) == 0
    assert inscribed_radius(hline()) == 0
    assert inscribed_radius(hline(width=5)) == 2
    assert inscribed_radius(block5()) == 1


def test_thin_examples():
    line = hline()
    np.testing.assert_array_equal(thin_skeletonize(line), line)
    staircase = np.eye(8, dtype=bool)
    np.testing.assert_array_equal(thin_skeletonize(staircase), staircase)
    for m, expected in ((disk(15, 5), (1, 0, 0)), (disk(21, 8, inner=3), (1, 1, 0))):
        s = thin_skeletonize(m)
        assert not np.any(s & ~m)
        assert betti_numbers(s).as_tuple() == expected



@pytest.mark.parametrize("m", [disk(21, 8, inner=3), disk(15, 5), hline(width=3)])
def test_thin_result_is_stable(m):
    # only endpoints may still be simple once thinning has converged
    from cldice.grid import neighbors
    from cldice.topology import is_simple_point

    s = thin_skeletonize(m)
    for idx in zip(*np.nonzero(s)):
        n_fg = sum(s[q] for q in neighbors(idx, 8, s.shape))
        assert n_fg <= 1 or not is_simple_point(s, idx)
    np.testing.assert_array_equal(thin_skeletonize(s), s)


def test_thin_empty_and_endpoints():
    assert not thin_skeletonize(np.zeros((5, 5), bool)).any()
    assert not thin_skeletonize(np.zeros((3, 4, 5), bool)).any()
    thick = hline(shape=(11, 20), row=5, start=2, stop=18, width=3)
    s = thin_skeletonize(thick)
    assert betti_numbers(s).as_tuple() == (1, 0, 0)
    # free ends survive: the skeleton still spans most of the tube length
    cols = np.nonzero(s.any(axis=0))[0]
    assert cols.min() <= 3 and cols.max() >= 16


@settings(max_examples=80, deadline=None)
@given(st.one_of(arrays(bool, (8, 8)), arrays(bool, (5, 5, 5))))
def test_thin_preserves_betti_random(m):
    s = thin_skeletonize(m)
    assert not np.any(s & ~m)
    assert betti_oracle(s) == betti_oracle(m)


def test_thin_3d_tube():
    m = np.zeros((7, 7, 12), bool)
    m[2:5, 2:5, 1:11] = True
    s = thin_skeletonize(m)
    assert betti_numbers(s).as_tuple() == (1, 0, 0)
    assert s.sum() < m.sum() // 4
