import numpy as np
import pytest
from numpy.testing import assert_allclose

from hwl import conditions as cond
from hwl import norms
from hwl.dyadic import (
    AlphaCoefficients,
    DyadicModel,
    LeafFunction,
    Weight,
    alpha_coefficients,
    haar_coefficients,
    haar_function,
    subtree_sums,
)
from hwl.errors import CapacityError
from hwl.operators import SignPattern, apply_T_sigma, square_function

from conftest import random_function, random_weight


def test_spectral_norm_basics():
    assert norms.spectral_norm(np.eye(5)) == pytest.approx(1.0, rel=1e-12)
    assert norms.spectral_norm(np.diag([3.0, 1.0, 0.5])) == pytest.approx(3.0, rel=1e-12)
    u, v = np.array([1.0, 2.0]), np.array([2.0, 0.0])
    assert norms.spectral_norm(np.outer(u, v)) == pytest.approx(2 * np.sqrt(5), rel=1e-11)
    assert norms.spectral_norm(np.zeros((3, 3))) == 0.0


def test_spectral_norm_orthogonal_start():
    # all-ones start lies in the kernel; the fallback start must recover the norm
    h = np.array([1.0, -1.0])
    m = np.outer(h, h)
    assert norms.spectral_norm(m) == pytest.approx(2.0, rel=1e-11)


def test_spectral_norm_vs_svd(rng):
    for shape in [(4, 4), (7, 3), (3, 7), (16, 16)]:
        a = rng.standard_normal(shape)
        assert norms.spectral_norm(a) == pytest.approx(
            np.linalg.svd(a, compute_uv=False)[0], rel=1e-10
        )


def test_assemble_projection_norm():
    m = DyadicModel(3)
    ones = Weight.from_values(m, np.ones(8))
    mat = norms.assemble(norms.TSigmaOp(SignPattern.constant(m)), ones, ones)
    assert norms.spectral_norm(mat) == pytest.approx(1.0, rel=1e-10)
    zero = norms.assemble(norms.T0Op(AlphaCoefficients(m, np.zeros(m.n_internal))), ones, ones)
    assert norms.spectral_norm(zero) == 0.0


def test_assemble_applies_like_operator(rng):
    # the absorbed matrix acts as v^{1/2} T_sigma (w^{1/2} .) on leaf vectors
    m = DyadicModel(3)
    v, w = random_weight(m, rng), random_weight(m, rng)
    sp = SignPattern(m, 1 - 2 * rng.integers(0, 2, m.n_internal))
    mat = norms.assemble(norms.TSigmaOp(sp), v, w).entries
    f = random_function(m, rng)
    from hwl.operators import apply_weighted_T_sigma

    expect = apply_weighted_T_sigma(f, sp, v, w).values
    assert_allclose(mat @ f.values, expect, rtol=1e-11, atol=1e-11)


def test_rank_one_norm(rng):
    for depth in (1, 2, 3):
        m = DyadicModel(depth)
        v, w = random_weight(m, rng), random_weight(m, rng)
        for k in range(m.n_internal):
            coeff = np.zeros(m.n_internal)
            coeff[k] = 1.0
            got = norms.spectral_norm(norms.assemble(norms.MultiplierOp(coeff), v, w))
            assert got == pytest.approx(np.sqrt(v.avg[k] * w.avg[k]), abs=1e-9, rel=1e-9)


def test_sup_sign_norm_trivial(rng):
    m = DyadicModel(2)
    ones = Weight.from_values(m, np.ones(4))
    res = norms.sup_sign_norm(ones, ones, norms.Exhaustive())
    assert res.lower_bound == pytest.approx(1.0, rel=1e-10)
    assert res.upper_bound == res.lower_bound
    # depth 1: the two patterns give the same norm
    m1 = DyadicModel(1)
    v, w = random_weight(m1, rng), random_weight(m1, rng)
    n_plus = norms.spectral_norm(norms.assemble(norms.TSigmaOp(SignPattern.constant(m1)), v, w))
    res = norms.sup_sign_norm(v, w, norms.Exhaustive())
    assert res.lower_bound == pytest.approx(n_plus, rel=1e-10)


def test_sup_sign_norm_exhaustive_oracle(rng):
    m = DyadicModel(2)
    v, w = random_weight(m, rng), random_weight(m, rng)
    res = norms.sup_sign_norm(v, w, norms.Exhaustive())
    best = max(
        norms.spectral_norm(norms.assemble(norms.TSigmaOp(SignPattern.from_bits(m, p)), v, w))
        for p in range(8)
    )
    assert res.lower_bound == pytest.approx(best, rel=1e-10)
    # best_sigma re-evaluates to the reported value
    re_eval = norms.spectral_norm(norms.assemble(norms.TSigmaOp(res.best_sigma), v, w))
    assert re_eval == pytest.approx(res.lower_bound, rel=1e-10)


def test_sup_sign_modes(rng):
    m = DyadicModel(3)
    v, w = random_weight(m, rng), random_weight(m, rng)
    exact = norms.sup_sign_norm(v, w, norms.Exhaustive())
    sampled = norms.sup_sign_norm(v, w, norms.Sampled(50, 7))
    greedy = norms.sup_sign_norm(v, w, norms.Greedy(3, 7))
    assert sampled.lower_bound <= exact.lower_bound + 1e-10
    assert greedy.lower_bound <= exact.lower_bound + 1e-10
    assert sampled.upper_bound is None and greedy.upper_bound is None
    assert sampled.seed == 7 and sampled.evaluations == 50
    # reproducible
    again = norms.sup_sign_norm(v, w, norms.Sampled(50, 7))
    assert again.lower_bound == sampled.lower_bound
    with pytest.raises(CapacityError):
        big = DyadicModel(5)
        norms.sup_sign_norm(random_weight(big, rng), random_weight(big, rng), norms.Exhaustive())


def test_sign_flip_isometry(rng):
    m = DyadicModel(3)
    v, w = random_weight(m, rng), random_weight(m, rng)
    sp = SignPattern(m, 1 - 2 * rng.integers(0, 2, m.n_internal))
    n1 = norms.spectral_norm(norms.assemble(norms.TSigmaOp(sp), v, w))
    n2 = norms.spectral_norm(norms.assemble(norms.TSigmaOp(sp.flipped()), v, w))
    assert n1 == n2  # exactly: the matrices differ by a global sign


def test_haar_gram_brute(rng):
    m = DyadicModel(3)
    v = random_weight(m, rng)
    nodes = np.arange(m.n_internal)
    gram = norms.haar_gram(v.avg, m, nodes)
    meas = m.node_size[-1]
    for a in range(m.n_internal):
        ha = haar_function(m.index(a), m).values
        for b in range(m.n_internal):
            hb = haar_function(m.index(b), m).values
            brute = float(np.sum(ha * hb * v.values)) * meas
            assert gram[a, b] == pytest.approx(brute, rel=1e-11, abs=1e-12)


def test_sign_average_identity(rng):
    m = DyadicModel(2)
    ones = Weight.from_values(m, np.ones(4))
    g = random_function(m, rng)
    lhs, rhs = norms.sign_average_identity(g, ones)
    c = haar_coefficients(g)
    assert lhs == pytest.approx(np.sum(c**2), rel=1e-11)
    assert rhs == pytest.approx(np.sum(c**2), rel=1e-11)

    const = LeafFunction(m, np.full(4, 2.0))
    lhs, rhs = norms.sign_average_identity(const, random_weight(m, rng))
    assert lhs == pytest.approx(0.0, abs=1e-14) and rhs == pytest.approx(0.0, abs=1e-14)

    # spec example: depth 2, g = (1,0,0,0), v = (1,2,1,2), enumerated oracle
    g = LeafFunction(m, [1, 0, 0, 0])
    v = Weight.from_values(m, [1, 2, 1, 2])
    lhs, rhs = norms.sign_average_identity(g, v)
    acc = 0.0
    for p in range(8):
        out = apply_T_sigma(g, SignPattern.from_bits(m, p))
        acc += float(np.sum(out.values**2 * v.values)) * m.node_size[-1]
    assert lhs == pytest.approx(acc / 8, rel=1e-12)
    assert abs(lhs - rhs) <= 1e-10 * (1 + rhs)


def test_t0_norm_swap_symmetry(rng):
    m = DyadicModel(3)
    v, w = random_weight(m, rng), random_weight(m, rng)
    assert norms.t0_norm(v, w) == pytest.approx(norms.t0_norm(w, v), rel=1e-9)
    ones = Weight.from_values(m, np.ones(8))
    assert norms.t0_norm(ones, w) == 0.0  # alpha vanishes


def test_t0_norm_dominates_testing(rng):
    m = DyadicModel(3)
    v, w = random_weight(m, rng), random_weight(m, rng)
    n0 = norms.t0_norm(v, w)
    s1, s2 = cond.sawyer_t0_test(v, w)
    assert s1.constant <= n0**2 + 1e-9
    assert s2.constant <= n0**2 + 1e-9


def test_embedding_norm_band(rng):
    # T <= E <= 16 T for the embedding characterization
    for depth in (2, 4, 6):
        m = DyadicModel(depth)
        w = random_weight(m, rng)
        alpha = AlphaCoefficients(m, rng.random(m.n_internal))
        e = norms.embedding_norm(alpha, w) ** 2
        ni = m.n_internal
        t = float(
            np.max(
                subtree_sums(m, w.avg[:ni] ** 2 * alpha.values)
                / (m.node_size[:ni] * w.avg[:ni])
            )
        )
        assert t <= e + 1e-9
        assert e <= 16.0 * t + 1e-9


def test_embedding_norm_matches_form(rng):
    # the assembled matrix realizes the quadratic form on explicit functions
    from hwl.operators import embedding_form

    m = DyadicModel(3)
    w = random_weight(m, rng)
    alpha = AlphaCoefficients(m, rng.random(m.n_internal))
    mat = norms.assemble(norms.EmbeddingOp(alpha), None, w).entries
    f = random_function(m, rng)
    phi = f.values * np.sqrt(m.node_size[-1])
    assert float(np.sum((mat @ phi) ** 2)) == pytest.approx(
        embedding_form(f, w, alpha), rel=1e-11
    )


def test_square_function_norm_and_testing(rng):
    m = DyadicModel(3)
    v, w = random_weight(m, rng), random_weight(m, rng)
    # matrix route matches the pointwise square function norm on explicit f
    mat = norms.assemble(norms.SquareFunctionOp(), v, w).entries
    f = random_function(m, rng)
    phi = f.values * np.sqrt(m.node_size[-1])
    fw = LeafFunction(m, f.values * np.sqrt(w.values))
    s = square_function(fw)
    assert float(np.sum((mat @ phi) ** 2)) == pytest.approx(
        float(np.sum(s.values**2 * v.values)) * m.node_size[-1], rel=1e-11
    )
    # per-J testing values equal the oscillation test's and sit under the norm squared
    s_norm = norms.square_function_norm(v, w)
    vals = norms.square_function_testing_values(v, w)
    assert_allclose(vals, cond.oscillation_test_w(v, w).per_interval, rtol=1e-9, atol=1e-12)
    assert np.all(vals <= s_norm**2 + 1e-9)


def test_multiplier_norm_chain_bound(rng):
    for depth in (2, 3):
        m = DyadicModel(depth)
        v, w = random_weight(m, rng), random_weight(m, rng)
        sup = norms.sup_sign_norm(v, w, norms.Exhaustive()).lower_bound
        bound = cond.testing_chain_bound(v, w, norms.t0_norm(v, w))
        assert sup <= bound + 1e-9


def test_spectral_norm_convergence_error():
    from hwl.errors import ConvergenceError

    m = np.diag([2.0, 1.0])
    with pytest.raises(ConvergenceError) as exc:
        norms.spectral_norm(m, max_iter=0)
    assert exc.value.best_estimate is not None


def test_depth_cap():
    m = DyadicModel(11)
    ones = Weight(LeafFunction(m, np.ones(m.n_leaves)))
    with pytest.raises(CapacityError):
        norms.assemble(norms.T0Op(), ones, ones)
    with pytest.raises(CapacityError):
        norms.sup_sign_norm(ones, ones, norms.Sampled(4, 1))


def test_operator_matrix_metadata(rng):
    m = DyadicModel(2)
    v, w = random_weight(m, rng), random_weight(m, rng)
    mat = norms.assemble(norms.T0Op(), v, w)
    assert mat.rows == 4 and mat.cols == 4
    assert mat.convention == "absorbed"
    assert mat.domain_weight is w and mat.codomain_weight is v


def test_rank_one_reference_pair():
    # the depth-1 pair w = (1,3), v = (2,1): single-interval multiplier norm
    # equals sqrt(<v><w>) = sqrt(3)
    m = DyadicModel(1)
    v, w = Weight.from_values(m, [2, 1]), Weight.from_values(m, [1, 3])
    coeff = np.array([1.0])
    got = norms.spectral_norm(norms.assemble(norms.MultiplierOp(coeff), v, w))
    assert got == pytest.approx(np.sqrt(3.0), rel=1e-11)
