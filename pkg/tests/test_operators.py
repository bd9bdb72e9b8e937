import numpy as np
import pytest
from numpy.testing import assert_allclose

from hwl.dyadic import (
    AlphaCoefficients,
    DyadicModel,
    LeafFunction,
    Weight,
    alpha_coefficients,
)
from hwl.errors import DomainError, ModelMismatchError
from hwl.operators import (
    SignPattern,
    apply_T0,
    apply_T_sigma,
    apply_weighted_T_sigma,
    bilinear_T0_form,
    bilinear_form_direct,
    embedding_form,
    four_sum_decomposition,
    kernel_matrix,
    square_function,
)

from conftest import random_function, random_weight


def test_sign_pattern_validation():
    m = DyadicModel(2)
    with pytest.raises(DomainError):
        SignPattern(m, [1, 2, 1])
    with pytest.raises(ModelMismatchError):
        SignPattern(m, [1, -1])
    sp = SignPattern.from_bits(m, 0b101)
    assert_allclose(sp.signs, [-1, 1, -1])
    assert_allclose(sp.flipped().signs, [1, -1, 1])


def test_T_sigma_examples(rng):
    m = DyadicModel(1)
    f = LeafFunction(m, [2, 0])
    out = apply_T_sigma(f, SignPattern.constant(m, -1))
    assert_allclose(out.values, [-1, 1])

    m3 = DyadicModel(3)
    c = LeafFunction(m3, np.full(8, 4.2))
    assert_allclose(apply_T_sigma(c, SignPattern.constant(m3)).values, 0, atol=1e-14)

    g = random_function(m3, rng)
    g0 = LeafFunction(m3, g.values - g.integral())
    assert_allclose(apply_T_sigma(g0, SignPattern.constant(m3)).values, g0.values, rtol=1e-12, atol=1e-12)
    # result is mean-zero
    assert abs(apply_T_sigma(g, SignPattern.constant(m3, -1)).integral()) < 1e-13


def test_sign_flip_covariance(rng):
    m = DyadicModel(4)
    f = random_function(m, rng)
    sp = SignPattern(m, 1 - 2 * rng.integers(0, 2, m.n_internal))
    a = apply_T_sigma(f, sp).values
    b = apply_T_sigma(f, sp.flipped()).values
    assert np.array_equal(a, -b)


def test_weighted_T_sigma_example():
    m = DyadicModel(1)
    out = apply_weighted_T_sigma(
        LeafFunction(m, [2, 0]),
        SignPattern.constant(m, -1),
        Weight.from_values(m, [4, 4]),
        Weight.from_values(m, [1, 1]),
    )
    assert_allclose(out.values, [-2, 2])


def test_T0_examples(rng):
    m = DyadicModel(1)
    one = LeafFunction(m, [1, 1])
    assert_allclose(apply_T0(one, AlphaCoefficients(m, [0.0])).values, 0)
    assert_allclose(apply_T0(one, AlphaCoefficients(m, [1.0])).values, [1, 1])

    m4 = DyadicModel(4)
    alpha = AlphaCoefficients(m4, rng.random(m4.n_internal))
    f = LeafFunction(m4, rng.random(m4.n_leaves))
    assert np.all(apply_T0(f, alpha).values >= 0)
    # monotone in f for nonnegative inputs
    g = LeafFunction(m4, f.values + rng.random(m4.n_leaves))
    assert np.all(apply_T0(g, alpha).values >= apply_T0(f, alpha).values - 1e-14)


def test_kernel_matrix(rng):
    m = DyadicModel(1)
    k = kernel_matrix(AlphaCoefficients(m, [1.0]))
    assert_allclose(k.entries, np.ones((2, 2)))
    assert_allclose(kernel_matrix(AlphaCoefficients(m, [0.0])).entries, 0)

    m4 = DyadicModel(4)
    alpha = AlphaCoefficients(m4, rng.random(m4.n_internal))
    km = kernel_matrix(alpha)
    assert np.array_equal(km.entries, km.entries.T)
    assert np.all(km.entries >= 0)
    f = random_function(m4, rng)
    assert_allclose(km.apply(f).values, apply_T0(f, alpha).values, atol=1e-10)


def test_square_function(rng):
    m = DyadicModel(1)
    assert_allclose(square_function(LeafFunction(m, [1, -1])).values, [2, 2])
    m4 = DyadicModel(4)
    c = LeafFunction(m4, np.full(16, 2.2))
    assert_allclose(square_function(c).values, 0, atol=1e-15)
    f = random_function(m4, rng)
    s = square_function(f)
    assert np.all(s.values >= 0) and s.values.max() > 0
    assert_allclose(square_function(-3.0 * f).values, 3.0 * s.values, rtol=1e-12)


def test_four_sum_constant_weights(rng):
    m = DyadicModel(3)
    ones = Weight.from_values(m, np.ones(8))
    f, g = random_function(m, rng), random_function(m, rng)
    sp = SignPattern(m, 1 - 2 * rng.integers(0, 2, m.n_internal))
    dec = four_sum_decomposition(f, g, sp, ones, ones)
    assert dec.sigma2 == pytest.approx(0, abs=1e-12)
    assert dec.sigma3 == pytest.approx(0, abs=1e-12)
    assert dec.sigma4 == pytest.approx(0, abs=1e-12)
    assert dec.sigma1 == pytest.approx(apply_T_sigma(f, sp).inner(g), rel=1e-12)


def test_four_sum_zero_function(rng):
    m = DyadicModel(2)
    v, w = random_weight(m, rng), random_weight(m, rng)
    zero = LeafFunction(m, np.zeros(4))
    g = random_function(m, rng)
    sp = SignPattern.constant(m)
    dec = four_sum_decomposition(zero, g, sp, v, w)
    assert dec.sigma1 == dec.sigma2 == dec.sigma3 == dec.sigma4 == 0.0


def test_four_sum_identity(rng):
    # spec example pair plus random instances at depths 1..5
    m2 = DyadicModel(2)
    w = Weight.from_values(m2, [1, 3, 2, 2])
    v = Weight.from_values(m2, [2, 1, 1, 1])
    f, g = random_function(m2, rng), random_function(m2, rng)
    sp = SignPattern(m2, 1 - 2 * rng.integers(0, 2, m2.n_internal))
    dec = four_sum_decomposition(f, g, sp, v, w)
    direct = bilinear_form_direct(f, g, sp, v, w)
    assert abs(dec.total - direct) <= 1e-9 * (1 + abs(dec.total))

    for depth in range(1, 6):
        m = DyadicModel(depth)
        for _ in range(20):
            v, w = random_weight(m, rng), random_weight(m, rng)
            f, g = random_function(m, rng), random_function(m, rng)
            sp = SignPattern(m, 1 - 2 * rng.integers(0, 2, m.n_internal))
            dec = four_sum_decomposition(f, g, sp, v, w)
            direct = bilinear_form_direct(f, g, sp, v, w)
            assert abs(dec.total - direct) <= 1e-9 * (1 + abs(dec.total))


def test_embedding_form_examples(rng):
    m = DyadicModel(1)
    ones = Weight.from_values(m, [1, 1])
    one = LeafFunction(m, [1, 1])
    assert embedding_form(one, ones, AlphaCoefficients(m, [0.0])) == 0
    assert embedding_form(one, ones, AlphaCoefficients(m, [1.0])) == pytest.approx(1.0)
    m4 = DyadicModel(4)
    w = random_weight(m4, rng)
    alpha = AlphaCoefficients(m4, rng.random(m4.n_internal))
    f = random_function(m4, rng)
    v1 = embedding_form(f, w, alpha)
    v2 = embedding_form(2.0 * f, w, alpha)
    assert v2 == pytest.approx(4.0 * v1, rel=1e-12)
    assert v1 >= 0


def test_bilinear_T0_form(rng):
    m = DyadicModel(1)
    w = Weight.from_values(m, [1, 3])
    v = Weight.from_values(m, [2, 1])
    one = LeafFunction(m, [1, 1])
    # single-term hand value: <v^{1/2}> <w^{1/2}> alpha_root
    expect = ((np.sqrt(2) + 1) / 2) * ((1 + np.sqrt(3)) / 2) * (2 / 3)
    assert bilinear_T0_form(one, one, v, w) == pytest.approx(expect, rel=1e-12)

    m4 = DyadicModel(4)
    v, w = random_weight(m4, rng), random_weight(m4, rng)
    f, g = random_function(m4, rng), random_function(m4, rng)
    # swap symmetry and the diagonal reduction to the embedding form
    assert bilinear_T0_form(f, g, v, w) == pytest.approx(
        bilinear_T0_form(g, f, w, v), rel=1e-11
    )
    assert bilinear_T0_form(f, f, w, w) == pytest.approx(
        embedding_form(f, w, alpha_coefficients(w, w)), rel=1e-11
    )
    # equals the operator pairing (T0(w^{1/2} f), v^{1/2} g)
    alpha = alpha_coefficients(v, w)
    fw = LeafFunction(m4, f.values * np.sqrt(w.values))
    gv = LeafFunction(m4, g.values * np.sqrt(v.values))
    assert bilinear_T0_form(f, g, v, w) == pytest.approx(
        apply_T0(fw, alpha).inner(gv), rel=1e-11
    )
