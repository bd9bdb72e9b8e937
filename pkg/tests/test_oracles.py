"""Brute-force oracles: every core quantity recomputed by direct summation
over intervals/leaves and compared against the library's fast paths."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hwl import conditions, norms
from hwl.dyadic import (
    DyadicModel,
    LeafFunction,
    Weight,
    alpha_coefficients,
    averages,
    haar_coefficients,
    haar_function,
)
from hwl.operators import SignPattern, apply_T0, apply_T_sigma, square_function

from conftest import random_function, random_weight


def _chi(model, k):
    mask = np.zeros(model.n_leaves)
    mask[model.leaf_start[k] : model.leaf_stop[k]] = 1.0
    return mask


def test_averages_brute(rng):
    m = DyadicModel(4)
    f = random_function(m, rng)
    avg = averages(f)
    for k in range(m.n_nodes):
        assert avg[k] == pytest.approx(
            f.values[m.leaf_start[k] : m.leaf_stop[k]].mean(), rel=1e-13
        )


def test_haar_coefficients_brute(rng):
    m = DyadicModel(4)
    f = random_function(m, rng)
    c = haar_coefficients(f)
    for k in range(m.n_internal):
        assert c[k] == pytest.approx(f.inner(haar_function(m.index(k), m)), rel=1e-12, abs=1e-13)


def test_T_sigma_brute(rng):
    m = DyadicModel(3)
    f = random_function(m, rng)
    sp = SignPattern(m, 1 - 2 * rng.integers(0, 2, m.n_internal))
    out = apply_T_sigma(f, sp)
    acc = np.zeros(m.n_leaves)
    for k in range(m.n_internal):
        h = haar_function(m.index(k), m)
        acc += sp.signs[k] * f.inner(h) * h.values
    assert_allclose(out.values, acc, rtol=1e-12, atol=1e-12)


def test_T0_brute(rng):
    m = DyadicModel(3)
    v, w = random_weight(m, rng), random_weight(m, rng)
    alpha = alpha_coefficients(v, w)
    f = random_function(m, rng)
    out = apply_T0(f, alpha)
    favg = averages(f)
    acc = np.zeros(m.n_leaves)
    for k in range(m.n_internal):
        acc += (1.0 / m.node_size[k]) * favg[k] * alpha.values[k] * _chi(m, k)
    assert_allclose(out.values, acc, rtol=1e-12, atol=1e-12)


def test_square_function_brute(rng):
    m = DyadicModel(4)
    f = random_function(m, rng)
    favg = averages(f)
    s = square_function(f)
    for leaf in range(m.n_leaves):
        total = 0.0
        k = m.n_internal + leaf
        while k > 0:
            k = (k - 1) // 2
            total += (favg[2 * k + 1] - favg[2 * k + 2]) ** 2
        assert s.values[leaf] == pytest.approx(np.sqrt(total), rel=1e-12, abs=1e-13)


def test_alpha_brute(rng):
    m = DyadicModel(3)
    v, w = random_weight(m, rng), random_weight(m, rng)
    alpha = alpha_coefficients(v, w)
    for k in range(m.n_internal):
        dv = abs(v.avg[2 * k + 1] - v.avg[2 * k + 2]) / v.avg[k]
        dw = abs(w.avg[2 * k + 1] - w.avg[2 * k + 2]) / w.avg[k]
        assert alpha.values[k] == pytest.approx(dv * dw * m.node_size[k], rel=1e-13)


def test_oscillation_test_brute(rng):
    m = DyadicModel(4)
    v, w = random_weight(m, rng), random_weight(m, rng)
    rep = conditions.oscillation_test_w(v, w)
    for j in range(m.n_internal):
        total = 0.0
        for k in m.descendants(j):
            dw = w.avg[2 * k + 1] - w.avg[2 * k + 2]
            total += dw**2 * v.avg[k] * m.node_size[k]
        want = total / (m.node_size[j] * w.avg[j])
        assert rep.per_interval[j] == pytest.approx(want, rel=1e-12)


def test_sawyer_t0_brute(rng):
    m = DyadicModel(3)
    v, w = random_weight(m, rng), random_weight(m, rng)
    alpha = alpha_coefficients(v, w)
    first, _ = conditions.sawyer_t0_test(v, w)
    meas = m.node_size[-1]
    for j in range(m.n_internal):
        inner = np.zeros(m.n_leaves)
        for k in m.descendants(j):
            inner += (1.0 / m.node_size[k]) * w.avg[k] * alpha.values[k] * _chi(m, k)
        chi_j = _chi(m, j)
        integral = float(np.sum((inner * chi_j) ** 2 * v.values)) * meas
        want = integral / (m.node_size[j] * w.avg[j])
        assert first.per_interval[j] == pytest.approx(want, rel=1e-11, abs=1e-13)


def test_sawyer_tsigma_brute_all_J(rng):
    m = DyadicModel(3)
    v, w = random_weight(m, rng), random_weight(m, rng)
    first, _ = conditions.sawyer_tsigma_test(v, w, norms.Exhaustive())
    meas = m.node_size[-1]
    c = haar_coefficients(w.base)
    for j in range(m.n_internal):
        nodes = m.descendants(j)
        best = -np.inf
        for p in range(1 << len(nodes)):
            acc = np.zeros(m.n_leaves)
            for bit, k in enumerate(nodes):
                sign = 1.0 - 2.0 * ((p >> bit) & 1)
                acc += sign * c[k] * haar_function(m.index(k), m).values
            val = float(np.sum(acc**2 * v.values * _chi(m, j))) * meas
            best = max(best, val)
        want = best / (m.node_size[j] * w.avg[j])
        assert first.per_interval[j] == pytest.approx(want, rel=1e-11)


def test_carleson_norm_brute(rng):
    m = DyadicModel(4)
    beta = rng.random(m.n_internal)
    rep = conditions.carleson_norm(m, beta)
    want = max(
        beta[m.descendants(j)].sum() / m.node_size[j] for j in range(m.n_internal)
    )
    assert rep.constant == pytest.approx(want, rel=1e-13)
