"""Weight generators for scenario configs.

A weight spec is a table with a `kind` plus kind-specific parameters:

  constant:      value
  explicit:      values (one per leaf)
  lognormal:     sigma_log, seed
  power:         exponent in (-1, 1), center (leaf index)
  reciprocal_of: other (nested spec), jitter, seed
"""

from __future__ import annotations

import numpy as np

from ..dyadic import EPS_WEIGHT, DyadicModel, LeafFunction, Weight
from ..errors import ConfigError

_KINDS = {
    "constant": {"value"},
    "explicit": {"values"},
    "lognormal": {"sigma_log", "seed"},
    "power": {"exponent", "center"},
    "reciprocal_of": {"other", "jitter", "seed"},
}


def _leaf_values(spec: dict, model: DyadicModel) -> np.ndarray:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("weight spec must be a table with a 'kind' key")
    kind = spec["kind"]
    if kind not in _KINDS:
        raise ConfigError(f"unknown weight kind {kind!r}")
    extra = set(spec) - _KINDS[kind] - {"kind"}
    if extra:
        raise ConfigError(f"unknown keys in {kind} weight spec: {sorted(extra)}")
    missing = _KINDS[kind] - set(spec)
    if missing:
        raise ConfigError(f"missing keys in {kind} weight spec: {sorted(missing)}")

    if kind == "constant":
        c = float(spec["value"])
        if c <= 0:
            raise ConfigError("constant weight must be positive")
        return np.full(model.n_leaves, c)

    if kind == "explicit":
        vals = np.asarray(spec["values"], dtype=np.float64)
        if vals.shape != (model.n_leaves,):
            raise ConfigError(
                f"explicit weight needs {model.n_leaves} values, got {vals.size}"
            )
        if np.any(vals <= 0):
            raise ConfigError("explicit weight values must be positive")
        return vals

    if kind == "lognormal":
        sigma = float(spec["sigma_log"])
        rng = np.random.default_rng(int(spec["seed"]))
        return np.exp(sigma * rng.standard_normal(model.n_leaves))

    if kind == "power":
        a = float(spec["exponent"])
        if not -1.0 < a < 1.0:
            raise ConfigError("power exponent must lie in (-1, 1)")
        center = int(spec["center"])
        if not 0 <= center < model.n_leaves:
            raise ConfigError("power center must be a leaf index")
        mids = (np.arange(model.n_leaves) + 0.5) * model.node_size[-1]
        dist = np.abs(mids - center * model.node_size[-1])
        return dist**a

    # reciprocal_of
    other = _leaf_values(spec["other"], model)
    jitter = float(spec["jitter"])
    rng = np.random.default_rng(int(spec["seed"]))
    noise = np.exp(jitter * rng.standard_normal(model.n_leaves)) if jitter else 1.0
    return noise / other


def generate_weights(spec: dict, depth: int) -> Weight:
    """Build a Weight from a generator table; values are clamped at
    EPS_WEIGHT; deterministic given the seeds the table carries."""
    model = DyadicModel(depth)
    vals = np.maximum(_leaf_values(spec, model), EPS_WEIGHT)
    return Weight(LeafFunction(model, vals))
