"""Built-in invariant suite at depths <= 4; deterministic, bundle-shaped output."""

from __future__ import annotations

import numpy as np

from .. import bellman, conditions, norms
from ..dyadic import (
    DyadicModel,
    LeafFunction,
    Weight,
    alpha_coefficients,
    averages,
    disbalanced_arrays,
    haar_coefficients,
    subtree_sums,
)
from ..operators import (
    SignPattern,
    apply_T0,
    apply_weighted_T_sigma,
    four_sum_decomposition,
    kernel_matrix,
    square_function,
)
from .scenario import AnalysisBundle, config_from_dict, run_scenario

_SEED = 20240901


def _rand_weight(model, rng, sigma=1.0):
    return Weight(LeafFunction(model, np.exp(sigma * rng.standard_normal(model.n_leaves))))


def _check_parseval(rng):
    worst = 0.0
    for depth in range(1, 5):
        model = DyadicModel(depth)
        for _ in range(50):
            f = LeafFunction(model, rng.standard_normal(model.n_leaves))
            c = haar_coefficients(f)
            lhs = float(np.sum(c**2) + f.integral() ** 2)
            rhs = f.inner(f)
            worst = max(worst, abs(lhs - rhs) / max(1.0, rhs))
    return worst, worst <= 1e-10


def _check_disbalanced(rng):
    worst = 0.0
    for depth in range(1, 5):
        model = DyadicModel(depth)
        for _ in range(20):
            w = _rand_weight(model, rng)
            x, a = disbalanced_arrays(w)
            for k in range(model.n_internal):
                idx = model.index(k)
                from ..dyadic import disbalanced_haar, haar_function

                dh = disbalanced_haar(w, idx)
                hw = dh.as_leaf_function(model)
                wb = w.base
                mean = float(np.sum(hw.values * wb.values)) * model.node_size[-1]
                nrm = float(np.sum(hw.values**2 * wb.values)) * model.node_size[-1]
                h = haar_function(idx, model)
                recon = dh.x_I * h.values - dh.A_I * (np.abs(h.values) > 0)
                # chi_I support: reconstruct on the support of h_I
                sup = slice(model.leaf_start[k], model.leaf_stop[k])
                delta = np.max(np.abs((dh.x_I * h.values - dh.A_I)[sup] - hw.values[sup]))
                worst = max(worst, abs(mean), abs(nrm - 1.0), float(delta))
    return worst, worst <= 1e-10


def _check_four_sum(rng):
    worst = 0.0
    for depth in range(1, 5):
        model = DyadicModel(depth)
        for _ in range(25):
            v, w = _rand_weight(model, rng), _rand_weight(model, rng)
            f = LeafFunction(model, rng.standard_normal(model.n_leaves))
            g = LeafFunction(model, rng.standard_normal(model.n_leaves))
            sigma = SignPattern(model, 1 - 2 * rng.integers(0, 2, model.n_internal))
            dec = four_sum_decomposition(f, g, sigma, v, w)
            direct = apply_weighted_T_sigma(f, sigma, v, w).inner(g)
            worst = max(worst, abs(dec.total - direct) / (1.0 + abs(dec.total)))
    return worst, worst <= 1e-9


def _check_sign_average(rng):
    worst = 0.0
    for depth in (1, 2, 3):
        model = DyadicModel(depth)
        for _ in range(10):
            v = _rand_weight(model, rng)
            g = LeafFunction(model, rng.standard_normal(model.n_leaves))
            lhs, rhs = norms.sign_average_identity(g, v)
            worst = max(worst, abs(lhs - rhs) / (1.0 + rhs))
    return worst, worst <= 1e-10


def _check_kernel_agreement(rng):
    worst = 0.0
    for depth in (1, 2, 3, 4):
        model = DyadicModel(depth)
        v, w = _rand_weight(model, rng), _rand_weight(model, rng)
        alpha = alpha_coefficients(v, w)
        f = LeafFunction(model, rng.standard_normal(model.n_leaves))
        via_kernel = kernel_matrix(alpha).apply(f)
        direct = apply_T0(f, alpha)
        worst = max(worst, float(np.max(np.abs(via_kernel.values - direct.values))))
    return worst, worst <= 1e-10


def _check_testing_dominates(rng):
    worst = -np.inf
    ok = True
    for _ in range(4):
        model = DyadicModel(3)
        v, w = _rand_weight(model, rng), _rand_weight(model, rng)
        sup = norms.sup_sign_norm(v, w, norms.Exhaustive()).lower_bound
        t1, t2 = conditions.sawyer_tsigma_test(v, w, norms.Exhaustive())
        gap = min(sup**2 - t1.constant, sup**2 - t2.constant)
        n0 = norms.t0_norm(v, w)
        s1, s2 = conditions.sawyer_t0_test(v, w)
        gap = min(gap, n0**2 - s1.constant, n0**2 - s2.constant)
        worst = max(worst, -gap)
        ok = ok and gap >= -1e-9
    return worst, ok


def _check_embedding_band(rng):
    ok = True
    worst = 0.0
    for _ in range(10):
        model = DyadicModel(4)
        w = _rand_weight(model, rng)
        from ..dyadic import AlphaCoefficients

        alpha = AlphaCoefficients(model, rng.random(model.n_internal))
        e = norms.embedding_norm(alpha, w) ** 2
        t = float(
            np.max(
                subtree_sums(model, w.avg[: model.n_internal] ** 2 * alpha.values)
                / (model.node_size[: model.n_internal] * w.avg[: model.n_internal])
            )
        )
        ok = ok and t <= e + 1e-9 and e <= 16.0 * t + 1e-9
        worst = max(worst, t - e, e - 16.0 * t)
    return worst, ok


def _check_s_testing(rng):
    worst = 0.0
    for _ in range(6):
        model = DyadicModel(4)
        v, w = _rand_weight(model, rng), _rand_weight(model, rng)
        s_vals = norms.square_function_testing_values(v, w)
        c_vals = conditions.oscillation_test_w(v, w).per_interval
        worst = max(worst, float(np.max(np.abs(s_vals - c_vals) / (1.0 + np.abs(c_vals)))))
    return worst, worst <= 1e-9


def _check_certificates(_rng):
    cfg = bellman.SamplerConfig(samples=4000, seed=_SEED)
    reports = [
        bellman.cert_alpha_small(0.25, cfg),
        bellman.cert_alpha_large(0.75, cfg),
        bellman.cert_embedding(1.0, cfg),
        bellman.cert_bilinear(2.0, cfg),
        bellman.cert_square_function(cfg),
    ]
    worst = min(r.worst_margin for r in reports)
    return worst, all(r.ok for r in reports)


def _fixed_scenario_bundle() -> AnalysisBundle:
    cfg = config_from_dict(
        {
            "depth": 3,
            "analyses": [
                "alpha", "joint_a2", "osc_test_w", "osc_test_v", "relative_osc_v", "relative_osc_w", "doubling_v",
                "doubling_w", "bump", "product_osc", "sigma_k", "sawyer_tsigma",
                "sawyer_t0", "sup_sign_norm", "t0_norm", "s_norm", "embedding_norm",
            ],
            "weight_spec_v": {"kind": "lognormal", "sigma_log": 1.0, "seed": 11},
            "weight_spec_w": {"kind": "lognormal", "sigma_log": 1.0, "seed": 22},
            "modes": {"sign_search": "exhaustive"},
        }
    )
    return run_scenario(cfg)


_CHECKS = [
    ("parseval", _check_parseval),
    ("disbalanced_haar", _check_disbalanced),
    ("four_sum_identity", _check_four_sum),
    ("sign_average_identity", _check_sign_average),
    ("kernel_matrix_agreement", _check_kernel_agreement),
    ("testing_dominates", _check_testing_dominates),
    ("embedding_band", _check_embedding_band),
    ("s_testing_equals_cond12", _check_s_testing),
    ("certificates", _check_certificates),
]


def run_selftest() -> dict:
    """Run the invariant suite; returns a deterministic document."""
    results = {}
    all_ok = True
    cert_fail = False
    for name, fn in _CHECKS:
        rng = np.random.default_rng(_SEED)
        worst, ok = fn(rng)
        results[name] = {"ok": bool(ok), "worst": float(worst)}
        all_ok = all_ok and ok
        if name == "certificates" and not ok:
            cert_fail = True
    bundle = _fixed_scenario_bundle()
    return {
        "selftest": results,
        "scenario": bundle.to_document(),
        "ok": bool(all_ok),
        "certificate_failure": bool(cert_fail),
    }
