"""Random + mutation search for weight pairs separating two conditions:
maximize (constant of the target condition) / (constant of the source)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import conditions
from ..dyadic import DyadicModel, LeafFunction, Weight
from ..errors import ConfigError
from .scenario import config_from_dict, run_scenario

SEARCHABLE = {
    "joint_a2": lambda v, w: conditions.joint_a2(v, w).constant,
    "osc_test_w": lambda v, w: conditions.oscillation_test_w(v, w).constant,
    "osc_test_v": lambda v, w: conditions.oscillation_test_v(v, w).constant,
    "sawyer_t0_1": lambda v, w: conditions.sawyer_t0_test(v, w)[0].constant,
    "sawyer_t0_2": lambda v, w: conditions.sawyer_t0_test(v, w)[1].constant,
    "relative_osc_v": lambda v, w: conditions.relative_oscillation_condition(v).constant,
    "relative_osc_w": lambda v, w: conditions.relative_oscillation_condition(w).constant,
    "doubling_v": lambda v, w: conditions.doubling_constant(v).constant,
    "doubling_w": lambda v, w: conditions.doubling_constant(w).constant,
}

_BUNDLE_ANALYSES = [
    "joint_a2", "osc_test_w", "osc_test_v", "relative_osc_v", "relative_osc_w",
    "doubling_v", "doubling_w", "sawyer_t0", "t0_norm", "s_norm", "embedding_norm",
]


@dataclass
class Specimen:
    ratio: float
    constant_from: float
    constant_to: float
    v_values: np.ndarray
    w_values: np.ndarray
    bundle: dict


def _ratio(c_from: float, c_to: float) -> float:
    if c_from > 0:
        return c_to / c_from
    return 0.0 if c_to <= 0 else float("inf")


def search_separation(
    cond_from: str,
    cond_to: str,
    depth: int,
    budget: int,
    seed: int,
    top_k: int = 5,
) -> list[Specimen]:
    """Maximize constant(cond_to)/constant(cond_from) over weight pairs.

    Random lognormal initialization plus multiplicative block mutations of the
    current elite pool; deterministic given the seed.  Returns the top_k
    specimens, each with a full condition/norm bundle.
    """
    for c in (cond_from, cond_to):
        if c not in SEARCHABLE:
            raise ConfigError(f"condition {c!r} is not searchable; pick from {sorted(SEARCHABLE)}")
    if budget <= 0:
        return []
    model = DyadicModel(depth)
    rng = np.random.default_rng(seed)
    f_from, f_to = SEARCHABLE[cond_from], SEARCHABLE[cond_to]

    # elite pool of (ratio, log_v, log_w)
    pool: list[tuple[float, float, float, np.ndarray, np.ndarray]] = []

    def evaluate(log_v, log_w):
        v = Weight(LeafFunction(model, np.exp(np.clip(log_v, -20, 20))))
        w = Weight(LeafFunction(model, np.exp(np.clip(log_w, -20, 20))))
        c1, c2 = f_from(v, w), f_to(v, w)
        return _ratio(c1, c2), c1, c2

    n_init = max(4, budget // 10)
    for i in range(min(n_init, budget)):
        log_v = rng.normal(0.0, 1.5, model.n_leaves)
        log_w = rng.normal(0.0, 1.5, model.n_leaves)
        r, c1, c2 = evaluate(log_v, log_w)
        pool.append((r, c1, c2, log_v, log_w))
    pool.sort(key=lambda t: -t[0])
    pool = pool[: max(top_k, 8)]

    for i in range(budget - min(n_init, budget)):
        parent = pool[rng.integers(0, len(pool))]
        log_v, log_w = parent[3].copy(), parent[4].copy()
        # mutate a random dyadic block of one of the two weights
        target = log_v if rng.random() < 0.5 else log_w
        level = int(rng.integers(0, model.depth + 1))
        pos = int(rng.integers(0, 1 << level))
        span = model.n_leaves >> level
        target[pos * span : (pos + 1) * span] += rng.normal(0.0, 0.7)
        if rng.random() < 0.3:
            target += rng.normal(0.0, 0.2, model.n_leaves)
        r, c1, c2 = evaluate(log_v, log_w)
        if r > pool[-1][0]:
            pool.append((r, c1, c2, log_v, log_w))
            pool.sort(key=lambda t: -t[0])
            pool = pool[: max(top_k, 8)]

    out = []
    for r, c1, c2, log_v, log_w in pool[:top_k]:
        v_vals = np.exp(np.clip(log_v, -20, 20))
        w_vals = np.exp(np.clip(log_w, -20, 20))
        cfg = config_from_dict(
            {
                "depth": depth,
                "analyses": list(_BUNDLE_ANALYSES),
                "weight_spec_v": {"kind": "explicit", "values": v_vals.tolist()},
                "weight_spec_w": {"kind": "explicit", "values": w_vals.tolist()},
            }
        )
        bundle = run_scenario(cfg)
        out.append(
            Specimen(
                ratio=r,
                constant_from=c1,
                constant_to=c2,
                v_values=v_vals,
                w_values=w_vals,
                bundle=bundle.to_document(),
            )
        )
    return out
