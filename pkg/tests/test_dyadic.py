import numpy as np
import pytest
from numpy.testing import assert_allclose

from hwl.dyadic import (
    DyadicIndex,
    DyadicModel,
    LeafFunction,
    Weight,
    alpha_coefficients,
    averages,
    disbalanced_arrays,
    disbalanced_haar,
    haar_coefficients,
    haar_function,
    subtree_sums,
)
from hwl.errors import DomainError, InvalidIndexError, ModelMismatchError

from conftest import random_function, random_weight


def test_index_basics():
    idx = DyadicIndex(2, 3)
    assert idx.length == 0.25
    assert idx.node == 6
    assert DyadicIndex.from_node(6) == idx
    assert idx.left() == DyadicIndex(3, 6)
    assert idx.right() == DyadicIndex(3, 7)
    with pytest.raises(InvalidIndexError):
        DyadicIndex(1, 2)
    with pytest.raises(InvalidIndexError):
        DyadicIndex(-1, 0)


def test_model_layout():
    m = DyadicModel(3)
    assert m.n_leaves == 8 and m.n_internal == 7 and m.n_nodes == 15
    assert m.node_level[0] == 0 and m.node_level[7] == 3
    assert m.leaf_start[0] == 0 and m.leaf_stop[0] == 8
    assert m.leaf_start[2] == 4 and m.leaf_stop[2] == 8  # right half of root
    assert list(m.descendants(1)) == [1, 3, 4]
    with pytest.raises(InvalidIndexError):
        DyadicModel(0)


def test_averages_examples():
    m1 = DyadicModel(1)
    assert_allclose(averages(LeafFunction(m1, [1, 1])), [1, 1, 1])
    a = averages(LeafFunction(m1, [2, 0]))
    assert_allclose(a, [1, 2, 0])
    m2 = DyadicModel(2)
    a2 = averages(LeafFunction(m2, [1, 3, 2, 2]))
    assert a2[0] == 2 and a2[1] == 2 and a2[2] == 2


def test_averages_midpoint_consistency(rng):
    for depth in range(1, 7):
        m = DyadicModel(depth)
        avg = averages(random_function(m, rng))
        ks = np.arange(m.n_internal)
        assert_allclose(avg[ks], 0.5 * (avg[2 * ks + 1] + avg[2 * ks + 2]), rtol=1e-12)


def test_haar_function_examples():
    m1, m2 = DyadicModel(1), DyadicModel(2)
    assert_allclose(haar_function(DyadicIndex(0, 0), m1).values, [1, -1])
    assert_allclose(haar_function(DyadicIndex(0, 0), m2).values, [1, 1, -1, -1])
    assert_allclose(
        haar_function(DyadicIndex(1, 0), m2).values, [np.sqrt(2), -np.sqrt(2), 0, 0]
    )
    h = haar_function(DyadicIndex(1, 1), m2)
    assert h.integral() == 0 and abs(h.norm2() - 1) < 1e-15
    with pytest.raises(InvalidIndexError):
        haar_function(DyadicIndex(2, 0), m2)


def test_haar_coefficients_examples(rng):
    m1 = DyadicModel(1)
    assert_allclose(haar_coefficients(LeafFunction(m1, [2, 0])), [1.0])
    m3 = DyadicModel(3)
    const = LeafFunction(m3, np.full(8, 3.7))
    assert_allclose(haar_coefficients(const), 0, atol=1e-15)
    h = haar_function(DyadicIndex(0, 0), m3)
    c = haar_coefficients(h)
    assert abs(c[0] - 1) < 1e-14 and np.all(np.abs(c[1:]) < 1e-14)


def test_parseval(rng):
    for depth in range(1, 9):
        m = DyadicModel(depth)
        for _ in range(10):
            f = random_function(m, rng)
            c = haar_coefficients(f)
            lhs = np.sum(c**2) + f.integral() ** 2
            assert abs(lhs - f.inner(f)) <= 1e-10 * max(1.0, f.inner(f))


def test_weight_validation():
    m = DyadicModel(1)
    with pytest.raises(DomainError):
        Weight(LeafFunction(m, [1.0, 0.0]))
    with pytest.raises(DomainError):
        Weight(LeafFunction(m, [1.0, -2.0]))
    with pytest.raises(ModelMismatchError):
        LeafFunction(m, [1.0, 2.0, 3.0])


def test_disbalanced_examples():
    m = DyadicModel(1)
    root = DyadicIndex(0, 0)
    flat = disbalanced_haar(Weight.from_values(m, [1, 1]), root)
    assert abs(flat.x_I - 1) < 1e-14 and abs(flat.A_I) < 1e-14

    dh = disbalanced_haar(Weight.from_values(m, [1, 3]), root)
    assert_allclose([dh.x_I, dh.A_I], [np.sqrt(2 / 3), -np.sqrt(2 / 3) / 2], rtol=1e-12)
    dh2 = disbalanced_haar(Weight.from_values(m, [3, 1]), root)
    assert_allclose([dh2.x_I, dh2.A_I], [np.sqrt(2 / 3), np.sqrt(2 / 3) / 2], rtol=1e-12)
    with pytest.raises(InvalidIndexError):
        disbalanced_haar(Weight.from_values(m, [1, 3]), DyadicIndex(1, 0))


def test_disbalanced_invariants(rng):
    for depth in range(1, 6):
        m = DyadicModel(depth)
        w = random_weight(m, rng)
        meas = m.node_size[-1]
        for k in range(m.n_internal):
            idx = m.index(k)
            dh = disbalanced_haar(w, idx)
            hw = dh.as_leaf_function(m).values
            # w-mean zero and unit L2(w) norm
            assert abs(np.sum(hw * w.values) * meas) < 1e-10
            assert abs(np.sum(hw**2 * w.values) * meas - 1.0) < 1e-10
            # identity x_I h_I = h^w_I + A_I chi_I on the support
            h = haar_function(idx, m).values
            sl = slice(m.leaf_start[k], m.leaf_stop[k])
            assert np.max(np.abs(dh.x_I * h[sl] - dh.A_I - hw[sl])) < 1e-10


def test_disbalanced_arrays_match_single(rng):
    m = DyadicModel(4)
    w = random_weight(m, rng)
    x, a = disbalanced_arrays(w)
    for k in (0, 3, 7, 14):
        dh = disbalanced_haar(w, m.index(k))
        assert_allclose([x[k], a[k]], [dh.x_I, dh.A_I], rtol=1e-14)


def test_alpha_examples():
    m = DyadicModel(1)
    ones = Weight.from_values(m, [1, 1])
    assert_allclose(alpha_coefficients(ones, ones).values, [0.0])
    w = Weight.from_values(m, [1, 3])
    v = Weight.from_values(m, [2, 1])
    assert_allclose(alpha_coefficients(v, w).values, [2 / 3], rtol=1e-14)
    assert_allclose(alpha_coefficients(ones, w).values, [0.0], atol=1e-15)
    with pytest.raises(ModelMismatchError):
        alpha_coefficients(v, Weight.from_values(DyadicModel(2), [1, 1, 1, 1]))


def test_alpha_nonnegative_and_symmetric(rng):
    m = DyadicModel(5)
    v, w = random_weight(m, rng), random_weight(m, rng)
    a1 = alpha_coefficients(v, w).values
    a2 = alpha_coefficients(w, v).values
    assert np.all(a1 >= 0)
    assert_allclose(a1, a2, rtol=1e-14)


def test_subtree_sums_brute(rng):
    m = DyadicModel(4)
    beta = rng.random(m.n_internal)
    s = subtree_sums(m, beta)
    for j in range(m.n_internal):
        assert_allclose(s[j], beta[m.descendants(j)].sum(), rtol=1e-13)
