"""Concrete operators on the dyadic model: Haar multipliers T_sigma, their weighted
versions, the positive-kernel operator T0, the square function S, the four-sum
bilinear decomposition through disbalanced Haar systems, and the embedding forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import (
    AlphaCoefficients,
    DyadicModel,
    LeafFunction,
    Weight,
    alpha_coefficients,
    averages,
    disbalanced_arrays,
    disbalanced_coefficients,
    haar_coefficients,
)
from .errors import DomainError, ModelMismatchError


class SignPattern:
    """A sign sigma_I in {+1,-1} for every internal interval, heap order."""

    def __init__(self, model: DyadicModel, signs):
        signs = np.asarray(signs)
        if signs.shape != (model.n_internal,):
            raise ModelMismatchError(
                f"expected {model.n_internal} signs, got shape {signs.shape}"
            )
        if not np.all(np.abs(signs) == 1):
            raise DomainError("signs must be +1 or -1")
        self.model = model
        self.signs = signs.astype(np.float64)
        self.signs.setflags(write=False)

    @staticmethod
    def constant(model: DyadicModel, sign: int = 1) -> "SignPattern":
        return SignPattern(model, np.full(model.n_internal, sign))

    @staticmethod
    def from_bits(model: DyadicModel, pattern_index: int) -> "SignPattern":
        """Pattern p: bit k of p set means sigma at internal node k is -1."""
        bits = (pattern_index >> np.arange(model.n_internal)) & 1
        return SignPattern(model, 1 - 2 * bits)

    def flipped(self) -> "SignPattern":
        return SignPattern(self.model, -self.signs)

    def __repr__(self):
        return f"SignPattern(depth={self.model.depth}, signs={self.signs.astype(int)!r})"


def _scatter_levels(model: DyadicModel, node_values: np.ndarray) -> np.ndarray:
    """Sum over internal I of node_values[I] * chi_I, returned as leaf values."""
    out = np.zeros(model.n_leaves)
    for level in range(model.depth):
        sl = model.internal_nodes_at(level)
        out += np.repeat(node_values[sl], 1 << (model.depth - level))
    return out


def _scatter_haar(model: DyadicModel, coeffs: np.ndarray) -> np.ndarray:
    """Sum over internal I of coeffs[I] * h_I, returned as leaf values."""
    out = np.zeros(model.n_leaves)
    for level in range(model.depth):
        sl = model.internal_nodes_at(level)
        amp = coeffs[sl] * 2.0 ** (level / 2.0)
        halves = np.stack([amp, -amp], axis=1).reshape(-1)
        out += np.repeat(halves, 1 << (model.depth - level - 1))
    return out


def apply_T_sigma(f: LeafFunction, sigma: SignPattern) -> LeafFunction:
    """T_sigma f = sum over I of sigma_I (f, h_I) h_I."""
    f.model.check_same(sigma.model)
    c = haar_coefficients(f)
    return LeafFunction(f.model, _scatter_haar(f.model, sigma.signs * c))


def apply_weighted_T_sigma(
    f: LeafFunction, sigma: SignPattern, v: Weight, w: Weight
) -> LeafFunction:
    """Pointwise v^{1/2} * T_sigma(w^{1/2} * f)."""
    f.model.check_same(v.model)
    f.model.check_same(w.model)
    inner = LeafFunction(f.model, f.values * w.sqrt_values())
    out = apply_T_sigma(inner, sigma)
    return LeafFunction(f.model, out.values * v.sqrt_values())


def apply_T0(f: LeafFunction, alpha: AlphaCoefficients) -> LeafFunction:
    """T0 f = sum over I of (1/|I|) <f>_I chi_I alpha_I."""
    f.model.check_same(alpha.model)
    m = f.model
    avg = averages(f)[: m.n_internal]
    scale = 2.0 ** m.node_level[: m.n_internal]  # 1/|I|
    return LeafFunction(m, _scatter_levels(m, avg * alpha.values * scale))


class KernelMatrix:
    """Leaf-sampled kernel k(x,y) = sum_I |I|^{-2} chi_I(x) chi_I(y) alpha_I."""

    def __init__(self, model: DyadicModel, entries: np.ndarray):
        self.model = model
        self.entries = entries
        self.entries.setflags(write=False)

    def apply(self, f: LeafFunction) -> LeafFunction:
        """Integral operator with this kernel, using the leaf measure 2^-N."""
        self.model.check_same(f.model)
        meas = self.model.node_size[-1]
        return LeafFunction(self.model, self.entries @ f.values * meas)


def kernel_matrix(alpha: AlphaCoefficients) -> KernelMatrix:
    m = alpha.model
    n = m.n_leaves
    entries = np.zeros((n, n))
    for level in range(m.depth):
        sl = m.internal_nodes_at(level)
        span = 1 << (m.depth - level)
        weight = alpha.values[sl] * 4.0 ** level  # |I|^{-2}
        for j, wj in enumerate(weight):
            a = j * span
            entries[a : a + span, a : a + span] += wj
    return KernelMatrix(m, entries)


def square_function(f: LeafFunction) -> LeafFunction:
    """Pointwise square root of sum over I containing x of |<f>_{I-} - <f>_{I+}|^2."""
    m = f.model
    avg = averages(f)
    ks = np.arange(m.n_internal)
    diff2 = (avg[2 * ks + 1] - avg[2 * ks + 2]) ** 2
    return LeafFunction(m, np.sqrt(_scatter_levels(m, diff2)))


@dataclass(frozen=True)
class FourSumDecomposition:
    """The bilinear form (T_sigma w^{1/2} f, v^{1/2} g) split through the
    disbalanced Haar systems of v and w into four sums."""

    sigma1: float
    sigma2: float
    sigma3: float
    sigma4: float

    @property
    def total(self) -> float:
        return self.sigma1 + self.sigma2 + self.sigma3 + self.sigma4


def four_sum_decomposition(
    f: LeafFunction, g: LeafFunction, sigma: SignPattern, v: Weight, w: Weight
) -> FourSumDecomposition:
    """Split (T_sigma w^{1/2} f, v^{1/2} g) into the four disbalanced-Haar sums.

    Writing h_I = (h^v_I + A^v_I chi_I)/x^v_I on the g side and the w-analogue
    on the f side, the term sigma_I (g v^{1/2}, h_I)(f w^{1/2}, h_I) expands
    into products of disbalanced coefficients and averages; the four groups are
    returned separately and their sum equals the direct bilinear form.
    """
    for other in (g.model, sigma.model, v.model, w.model):
        f.model.check_same(other)
    m = f.model
    size = m.node_size[: m.n_internal]

    gv = LeafFunction(m, g.values * v.sqrt_values())
    fw = LeafFunction(m, f.values * w.sqrt_values())
    p = disbalanced_coefficients(gv, v)  # (g v^{1/2}, h^v_I)
    q = disbalanced_coefficients(fw, w)  # (f w^{1/2}, h^w_I)
    a_v = averages(gv)[: m.n_internal]
    a_w = averages(fw)[: m.n_internal]
    xv, Av = disbalanced_arrays(v)
    xw, Aw = disbalanced_arrays(w)

    s = sigma.signs / (xv * xw)
    s1 = float(np.sum(s * p * q))
    s2 = float(np.sum(s * p * a_w * Aw * size))
    s3 = float(np.sum(s * q * a_v * Av * size))
    s4 = float(np.sum(s * a_v * a_w * Av * Aw * size**2))
    return FourSumDecomposition(s1, s2, s3, s4)


def bilinear_form_direct(
    f: LeafFunction, g: LeafFunction, sigma: SignPattern, v: Weight, w: Weight
) -> float:
    """(v^{1/2} T_sigma(w^{1/2} f), g), evaluated directly."""
    return apply_weighted_T_sigma(f, sigma, v, w).inner(g)


def embedding_form(f: LeafFunction, w: Weight, alpha: AlphaCoefficients) -> float:
    """sum over internal I of <f w^{1/2}>_I^2 alpha_I."""
    f.model.check_same(w.model)
    f.model.check_same(alpha.model)
    m = f.model
    fw = averages(LeafFunction(m, f.values * w.sqrt_values()))[: m.n_internal]
    return float(np.sum(fw**2 * alpha.values))


def bilinear_T0_form(f: LeafFunction, g: LeafFunction, v: Weight, w: Weight) -> float:
    """sum over internal I of <g v^{1/2}>_I <f w^{1/2}>_I alpha_I, with alpha from (v, w).

    Equals (T0(w^{1/2} f), v^{1/2} g) and reduces to `embedding_form` when
    f = g and w = v.
    """
    for other in (g.model, v.model, w.model):
        f.model.check_same(other)
    m = f.model
    alpha = alpha_coefficients(v, w)
    gv = averages(LeafFunction(m, g.values * v.sqrt_values()))[: m.n_internal]
    fw = averages(LeafFunction(m, f.values * w.sqrt_values()))[: m.n_internal]
    return float(np.sum(gv * fw * alpha.values))
