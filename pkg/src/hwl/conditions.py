"""Best constants, with attaining intervals, for the testing and necessary
conditions: joint A2, the two difference-square conditions, Sawyer-type tests
for the sign family and for T0, Carleson norms and the level-set families,
the product-average inequality at general exponents, the bump condition, and
the A-infinity proxies (square-difference sum and dyadic doubling).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import (
    AlphaCoefficients,
    DyadicIndex,
    DyadicModel,
    LeafFunction,
    Weight,
    alpha_coefficients,
    haar_coefficients,
    subtree_sums,
)
from .errors import CapacityError, DomainError
from .norms import (
    MAX_EXHAUSTIVE_INTERNAL,
    Exhaustive,
    Greedy,
    Sampled,
    SearchMode,
    _pattern_chunk,
    haar_gram,
)


@dataclass
class ConditionReport:
    """Best constant of one condition over the dyadic tree.

    per_interval holds the per-J values (heap order over `domain` nodes);
    constant is their max and witness the first attaining interval in
    level-then-pos order.
    """

    name: str
    constant: float
    witness: DyadicIndex
    per_interval: np.ndarray | None = None
    domain: str = "internal"  # or "all"
    info: dict | None = None


def _report(name, values, domain="internal", info=None) -> ConditionReport:
    i = int(np.argmax(values))  # first max == smallest level, then pos
    return ConditionReport(
        name=name,
        constant=float(values[i]),
        witness=DyadicIndex.from_node(i),
        per_interval=values,
        domain=domain,
        info=info,
    )


def joint_a2(v: Weight, w: Weight) -> ConditionReport:
    """sup over all intervals (leaves included) of <v>_I <w>_I."""
    v.model.check_same(w.model)
    return _report("joint_a2", v.avg * w.avg, domain="all")


def _diff(avg: np.ndarray, n_internal: int) -> np.ndarray:
    ks = np.arange(n_internal)
    return avg[2 * ks + 1] - avg[2 * ks + 2]


def oscillation_test_w(v: Weight, w: Weight) -> ConditionReport:
    """max over internal J of (1/|J|) sum_{I in J} |Dw_I|^2 <v>_I |I| / <w>_J."""
    v.model.check_same(w.model)
    m = v.model
    ni = m.n_internal
    beta = _diff(w.avg, ni) ** 2 * v.avg[:ni] * m.node_size[:ni]
    vals = subtree_sums(m, beta) / (m.node_size[:ni] * w.avg[:ni])
    return _report("osc_test_w", vals)


def oscillation_test_v(v: Weight, w: Weight) -> ConditionReport:
    """The (v, w)-swapped companion of oscillation_test_w."""
    rep = oscillation_test_w(w, v)
    rep.name = "osc_test_v"
    return rep


def _tsigma_grams(v: Weight, w: Weight):
    """Per-J Gram matrices G_J with sigma^T G_J sigma = integral over J of
    |sum_{I in J} sigma_I (chi_J w, h_I) h_I|^2 v dx."""
    model = w.model
    c = haar_coefficients(w.base)
    for j in range(model.n_internal):
        nodes = model.descendants(j)
        gram = np.outer(c[nodes], c[nodes]) * haar_gram(v.avg, model, nodes)
        yield j, nodes, gram


def _max_pm_quadratic(gram: np.ndarray, mode: SearchMode, rng) -> float:
    m = gram.shape[0]
    if isinstance(mode, Exhaustive):
        if m > MAX_EXHAUSTIVE_INTERNAL:
            raise CapacityError(
                f"exhaustive testing needs <= {MAX_EXHAUSTIVE_INTERNAL} intervals in the subtree, got {m}"
            )
        best = -np.inf
        total = 1 << m
        for start in range(0, total, 1 << 16):
            signs = _pattern_chunk(start, min(start + (1 << 16), total), m)
            vals = np.einsum("pk,kl,pl->p", signs, gram, signs)
            best = max(best, float(vals.max()))
        return best
    if isinstance(mode, Sampled):
        signs = (1 - 2 * rng.integers(0, 2, size=(mode.n, m))).astype(np.float64)
        vals = np.einsum("pk,kl,pl->p", signs, gram, signs)
        return float(vals.max())
    if isinstance(mode, Greedy):
        best = -np.inf
        for _ in range(mode.restarts):
            signs = (1 - 2 * rng.integers(0, 2, size=m)).astype(np.float64)
            gs = gram @ signs
            cur = float(signs @ gs)
            improved = True
            while improved:
                improved = False
                for k in range(m):
                    delta = -4.0 * signs[k] * gs[k] + 4.0 * gram[k, k]
                    if delta > 1e-15 * max(abs(cur), 1.0):
                        cur += delta
                        signs[k] = -signs[k]
                        gs += 2.0 * signs[k] * gram[:, k]
                        improved = True
            best = max(best, cur)
        return best
    raise TypeError(f"unknown search mode: {mode!r}")


def _sawyer_tsigma_one(v: Weight, w: Weight, mode: SearchMode) -> ConditionReport:
    model = w.model
    ni = model.n_internal
    vals = np.zeros(ni)
    rng = np.random.default_rng(getattr(mode, "seed", None))
    for j, nodes, gram in _tsigma_grams(v, w):
        sup = _max_pm_quadratic(gram, mode, rng)
        vals[j] = sup / (model.node_size[j] * w.avg[j])
    info = {"mode": type(mode).__name__.lower()}
    if getattr(mode, "seed", None) is not None:
        info["seed"] = mode.seed
    return _report("sawyer_tsigma", vals, info=info)


def sawyer_tsigma_test(
    v: Weight, w: Weight, mode: SearchMode
) -> tuple[ConditionReport, ConditionReport]:
    """Sawyer-type testing of the sign family on chi_J w (and, swapped, chi_J v):

    per J, sup over sign patterns on the subtree of J of
    (1/|J|) integral over J of |T_sigma(chi_J w)|^2 v dx, divided by <w>_J.

    Exhaustive mode gives the exact sup; sampled/greedy give lower bounds.
    """
    v.model.check_same(w.model)
    first = _sawyer_tsigma_one(v, w, mode)
    second = _sawyer_tsigma_one(w, v, mode)
    first.name, second.name = "sawyer_tsigma_1", "sawyer_tsigma_2"
    return first, second


def _sawyer_t0_one(v: Weight, w: Weight, alpha: AlphaCoefficients) -> ConditionReport:
    model = w.model
    ni = model.n_internal
    scale = 2.0 ** model.node_level[:ni]  # 1/|I|
    term = w.avg[:ni] * alpha.values * scale
    vals = np.zeros(ni)
    for j in range(ni):
        a, b = model.leaf_start[j], model.leaf_stop[j]
        inner = np.zeros(b - a)
        for level in range(model.node_level[j], model.depth):
            lo = (1 << level) - 1 + (model.node_pos[j] << (level - model.node_level[j]))
            hi = lo + (1 << (level - model.node_level[j]))
            inner += np.repeat(term[lo:hi], 1 << (model.depth - level))
        # integral over J of inner^2 v dx with the leaf measure
        integral = float(np.sum(inner**2 * v.values[a:b])) * model.node_size[-1]
        vals[j] = integral / (model.node_size[j] * w.avg[j])
    return _report("sawyer_t0", vals)


def sawyer_t0_test(v: Weight, w: Weight) -> tuple[ConditionReport, ConditionReport]:
    """Sawyer-type testing of T0 (alpha derived from (v, w)):

    per J, (1/|J|) integral over J of (sum_{I in J} (1/|I|) chi_I <w>_I alpha_I)^2 v dx
    divided by <w>_J, and the (v, w)-swapped version.
    """
    v.model.check_same(w.model)
    alpha = alpha_coefficients(v, w)
    first = _sawyer_t0_one(v, w, alpha)
    second = _sawyer_t0_one(w, v, alpha)
    first.name, second.name = "sawyer_t0_1", "sawyer_t0_2"
    return first, second


def carleson_norm(model: DyadicModel, beta: np.ndarray, name: str = "carleson") -> ConditionReport:
    """max over internal J of (1/|J|) sum of beta_I over I in the subtree of J."""
    beta = np.asarray(beta, dtype=np.float64)
    if np.any(beta < 0):
        raise DomainError("Carleson mass must be nonnegative")
    ni = model.n_internal
    vals = subtree_sums(model, beta) / model.node_size[:ni]
    return _report(name, vals)


@dataclass
class CarlesonFamily:
    """Level-set binning of internal intervals by the product <v>_I <w>_I.

    After pre-scaling to sup <v><w> = 1, interval I belongs to family k when
    q^{k+1} <= <v>_I <w>_I <= q^k (boundary products resolve to the larger k);
    beta_I is the oscillation mass |Dv/<v>| |Dw/<w>| |I|.
    """

    q: float
    bin_index: np.ndarray
    beta: np.ndarray

    def family(self, k: int) -> np.ndarray:
        return np.nonzero(self.bin_index == k)[0]


@dataclass
class SigmaKReport:
    family: CarlesonFamily
    per_k: list[ConditionReport]
    aggregate: ConditionReport
    a2_constant: float


def sigma_k_families(v: Weight, w: Weight, q: float) -> SigmaKReport:
    """Carleson norms of the per-family masses sigma_k and of the weighted
    aggregate sum_k q^{k/4} sigma_k, after joint A2 normalization."""
    if not 0.0 < q < 1.0:
        raise DomainError("q must lie in (0, 1)")
    v.model.check_same(w.model)
    model = v.model
    ni = model.n_internal
    a2 = joint_a2(v, w).constant
    products = v.avg[:ni] * w.avg[:ni] / a2
    alpha = alpha_coefficients(v, w)
    bins = np.floor(np.log(products) / np.log(q)).astype(np.int64)
    bins = np.maximum(bins, 0)
    fam = CarlesonFamily(q=q, bin_index=bins, beta=alpha.values.copy())
    per_k = []
    for k in range(int(bins.max()) + 1):
        mask = bins == k
        if not mask.any():
            continue
        rep = carleson_norm(model, np.where(mask, fam.beta, 0.0), name=f"sigma_{k}")
        rep.info = {"k": k, "count": int(mask.sum())}
        per_k.append(rep)
    aggregate = carleson_norm(model, fam.beta * q ** (bins / 4.0), name="sigma_aggregate")
    return SigmaKReport(family=fam, per_k=per_k, aggregate=aggregate, a2_constant=a2)


def product_oscillation_constant(v: Weight, w: Weight, alpha_exp: float) -> ConditionReport:
    """Best constant in the normalized product-average inequality

    (1/|J|) sum_{I in J} (<v>_I <w>_I)^a |Dv/<v>| |Dw/<w>| |I|
        <= C (<v>_J <w>_J)^{min(a, 1/2)}

    after pre-scaling so sup <v><w> = 1.  The exponent a = 1/2 is rejected
    (the constant degenerates there).
    """
    if not 0.0 < alpha_exp <= 1.0 or alpha_exp == 0.5:
        raise DomainError("alpha_exp must lie in (0, 1] and differ from 1/2")
    v.model.check_same(w.model)
    model = v.model
    ni = model.n_internal
    a2 = joint_a2(v, w).constant
    products = v.avg[:ni] * w.avg[:ni] / a2
    alpha = alpha_coefficients(v, w)
    lhs = subtree_sums(model, products**alpha_exp * alpha.values) / model.node_size[:ni]
    vals = lhs / products ** min(alpha_exp, 0.5)
    return _report("product_osc", vals, info={"alpha_exp": alpha_exp, "a2_prescale": a2})


def bump_condition(v: Weight, w: Weight, eta: float) -> ConditionReport:
    """max over all intervals of <v^{1+eta}>_I <w^{1+eta}>_I (no outer roots)."""
    if eta <= 0:
        raise DomainError("eta must be positive")
    v.model.check_same(w.model)
    vb = Weight(LeafFunction(v.model, v.values ** (1.0 + eta)))
    wb = Weight(LeafFunction(w.model, w.values ** (1.0 + eta)))
    rep = _report("bump", vb.avg * wb.avg, domain="all", info={"eta": eta})
    return rep


def relative_oscillation_condition(u: Weight) -> ConditionReport:
    """max over internal J of (1/|J|) sum_{I in J} <u>_I (Du/<u>_I)^2 |I| / <u>_J."""
    model = u.model
    ni = model.n_internal
    du = _diff(u.avg, ni) / u.avg[:ni]
    beta = u.avg[:ni] * du**2 * model.node_size[:ni]
    vals = subtree_sums(model, beta) / (model.node_size[:ni] * u.avg[:ni])
    return _report("relative_osc", vals)


def doubling_constant(u: Weight) -> ConditionReport:
    """max over internal I of <u>_I / min(<u>_{I-}, <u>_{I+}); 1 for constants."""
    model = u.model
    ni = model.n_internal
    ks = np.arange(ni)
    vals = u.avg[ks] / np.minimum(u.avg[2 * ks + 1], u.avg[2 * ks + 2])
    return _report("doubling", vals)


def testing_chain_bound(v: Weight, w: Weight, t0_operator_norm: float, band: float = 16.0) -> float:
    """Upper bound on sup_sigma of the weighted multiplier norm assembled from
    the condition constants through the four-sum estimates:

    sqrt(A2) bounds the diagonal sum; each off-diagonal sum is bounded through
    the embedding characterization (testing constant cond/4, band factor for the
    embedding norm); the averaged sum is |.| <= (1/4) * T0 norm.
    """
    a2 = joint_a2(v, w).constant
    c12 = oscillation_test_w(v, w).constant
    c13 = oscillation_test_v(v, w).constant
    return (
        np.sqrt(a2)
        + np.sqrt(band * c12 / 4.0)
        + np.sqrt(band * c13 / 4.0)
        + t0_operator_norm / 4.0
    )
