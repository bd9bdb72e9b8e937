"""Scenario configuration, the analysis registry, and the bundle runner."""

from __future__ import annotations

import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from .. import bellman, conditions, norms
from ..dyadic import alpha_coefficients
from ..errors import CapacityError, ConfigError, HwlError
from .weights import generate_weights

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_MODE_KEYS = {
    "sign_search",
    "sign_samples",
    "sign_restarts",
    "seed",
    "bump_eta",
    "product_exponent",
    "carleson_q",
    "cert_samples",
    "cert_seed",
    "cert_c_dom",
}
_MODE_DEFAULTS = {
    "sign_search": "exhaustive",
    "sign_samples": 1024,
    "sign_restarts": 8,
    "bump_eta": 1.0,
    "product_exponent": 0.25,
    "carleson_q": 0.5,
    "cert_samples": 20000,
    "cert_c_dom": 1.0,
}
_OUTPUT_KEYS = {"path", "format"}
_TOP_KEYS = {"depth", "analyses", "weight_spec_v", "weight_spec_w", "modes", "output"}


@dataclass
class ScenarioConfig:
    depth: int
    analyses: list[str]
    weight_spec_v: dict
    weight_spec_w: dict
    modes: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def as_document(self) -> dict:
        return {
            "depth": self.depth,
            "analyses": list(self.analyses),
            "weight_spec_v": self.weight_spec_v,
            "weight_spec_w": self.weight_spec_w,
            "modes": self.modes,
            "output": self.output,
        }


@dataclass
class AnalysisBundle:
    config: dict
    analyses: dict
    metadata: dict
    wall_time: float = 0.0  # informational only; never serialized

    def to_document(self) -> dict:
        return {
            "schema_version": 1,
            "config": self.config,
            "analyses": self.analyses,
            "metadata": self.metadata,
        }


def worker_count() -> int:
    env = os.environ.get("HWL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"HWL_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# analysis registry

def _witness(rep):
    return {"level": int(rep.witness.level), "pos": int(rep.witness.pos)}


def _cond_dict(rep) -> dict:
    out = {
        "name": rep.name,
        "constant": float(rep.constant),
        "witness": _witness(rep),
        "domain": rep.domain,
    }
    if rep.per_interval is not None:
        out["per_interval"] = np.asarray(rep.per_interval, dtype=np.float64)
    if rep.info:
        out["info"] = rep.info
    return out


def _cert_dict(rep: bellman.CertificateReport) -> dict:
    return {
        "certificate": rep.certificate,
        "samples": rep.samples,
        "worst_margin": rep.worst_margin,
        "best_constant_estimate": rep.best_constant_estimate,
        "failures": rep.failures,
        "seed": rep.seed,
        "ok": bool(rep.ok),
        "info": rep.info,
    }


def _sign_mode(modes: dict):
    name = modes["sign_search"]
    if name == "exhaustive":
        return norms.Exhaustive()
    if name == "sampled":
        return norms.Sampled(int(modes["sign_samples"]), int(modes["seed"]))
    if name == "greedy":
        return norms.Greedy(int(modes["sign_restarts"]), int(modes["seed"]))
    raise ConfigError(f"unknown sign_search mode {name!r}")


def _cert_cfg(modes: dict) -> bellman.SamplerConfig:
    return bellman.SamplerConfig(int(modes["cert_samples"]), int(modes["cert_seed"]))


def _run_alpha(v, w, modes):
    alpha = alpha_coefficients(v, w)
    i = int(np.argmax(alpha.values))
    from ..dyadic import DyadicIndex

    return {
        "name": "alpha",
        "constant": float(alpha.values[i]),
        "witness": {"level": int(DyadicIndex.from_node(i).level), "pos": int(DyadicIndex.from_node(i).pos)},
        "domain": "internal",
        "per_interval": alpha.values.copy(),
    }


def _run_joint_a2(v, w, modes):
    return _cond_dict(conditions.joint_a2(v, w))


def _run_oscillation_test_w(v, w, modes):
    return _cond_dict(conditions.oscillation_test_w(v, w))


def _run_oscillation_test_v(v, w, modes):
    return _cond_dict(conditions.oscillation_test_v(v, w))


def _run_relative_osc_v(v, w, modes):
    return _cond_dict(conditions.relative_oscillation_condition(v))


def _run_relative_osc_w(v, w, modes):
    return _cond_dict(conditions.relative_oscillation_condition(w))


def _run_doubling_v(v, w, modes):
    return _cond_dict(conditions.doubling_constant(v))


def _run_doubling_w(v, w, modes):
    return _cond_dict(conditions.doubling_constant(w))


def _run_bump(v, w, modes):
    return _cond_dict(conditions.bump_condition(v, w, float(modes["bump_eta"])))


def _run_product_osc(v, w, modes):
    return _cond_dict(conditions.product_oscillation_constant(v, w, float(modes["product_exponent"])))


def _run_sigma_k(v, w, modes):
    rep = conditions.sigma_k_families(v, w, float(modes["carleson_q"]))
    return {
        "q": rep.family.q,
        "a2_prescale": rep.a2_constant,
        "per_k": [_cond_dict(r) for r in rep.per_k],
        "aggregate": _cond_dict(rep.aggregate),
    }


def _run_sawyer_tsigma(v, w, modes):
    first, second = conditions.sawyer_tsigma_test(v, w, _sign_mode(modes))
    return {"condition_1": _cond_dict(first), "condition_2": _cond_dict(second)}


def _run_sawyer_t0(v, w, modes):
    first, second = conditions.sawyer_t0_test(v, w)
    return {"condition_1": _cond_dict(first), "condition_2": _cond_dict(second)}


def _run_sup_sign_norm(v, w, modes):
    res = norms.sup_sign_norm(v, w, _sign_mode(modes))
    return {
        "lower_bound": res.lower_bound,
        "upper_bound": res.upper_bound,
        "mode": res.mode,
        "evaluations": res.evaluations,
        "seed": res.seed,
        "best_sigma": res.best_sigma.signs.astype(int).tolist(),
    }


def _run_t0_norm(v, w, modes):
    return {"norm": norms.t0_norm(v, w)}


def _run_s_norm(v, w, modes):
    return {"norm": norms.square_function_norm(v, w)}


def _run_embedding_norm(v, w, modes):
    alpha = alpha_coefficients(v, w)
    return {"norm": norms.embedding_norm(alpha, w)}


def _run_cert_alpha_small(v, w, modes):
    cfg = _cert_cfg(modes)
    return {
        "reports": [
            _cert_dict(bellman.cert_alpha_small(a, cfg)) for a in (0.1, 0.25, 0.4, 0.49)
        ]
    }


def _run_cert_alpha_large(v, w, modes):
    cfg = _cert_cfg(modes)
    return {
        "reports": [_cert_dict(bellman.cert_alpha_large(a, cfg)) for a in (0.6, 0.75, 1.0)]
    }


def _run_cert_embedding(v, w, modes):
    return {"reports": [_cert_dict(bellman.cert_embedding(float(modes["cert_c_dom"]), _cert_cfg(modes)))]}


def _run_cert_bilinear(v, w, modes):
    return {"reports": [_cert_dict(bellman.cert_bilinear(float(modes["cert_c_dom"]), _cert_cfg(modes)))]}


def _run_cert_square_function(v, w, modes):
    return {"reports": [_cert_dict(bellman.cert_square_function(_cert_cfg(modes), float(modes["cert_c_dom"])))]}


# fixed execution order: conditions, then norms, then certificates
ANALYSES = {
    "alpha": _run_alpha,
    "joint_a2": _run_joint_a2,
    "osc_test_w": _run_oscillation_test_w,
    "osc_test_v": _run_oscillation_test_v,
    "relative_osc_v": _run_relative_osc_v,
    "relative_osc_w": _run_relative_osc_w,
    "doubling_v": _run_doubling_v,
    "doubling_w": _run_doubling_w,
    "bump": _run_bump,
    "product_osc": _run_product_osc,
    "sigma_k": _run_sigma_k,
    "sawyer_tsigma": _run_sawyer_tsigma,
    "sawyer_t0": _run_sawyer_t0,
    "sup_sign_norm": _run_sup_sign_norm,
    "t0_norm": _run_t0_norm,
    "s_norm": _run_s_norm,
    "embedding_norm": _run_embedding_norm,
    "cert_alpha_small": _run_cert_alpha_small,
    "cert_alpha_large": _run_cert_alpha_large,
    "cert_embedding": _run_cert_embedding,
    "cert_bilinear": _run_cert_bilinear,
    "cert_square_function": _run_cert_square_function,
}

CONDITION_ANALYSES = [
    "alpha", "joint_a2", "osc_test_w", "osc_test_v", "relative_osc_v", "relative_osc_w", "doubling_v",
    "doubling_w", "bump", "product_osc", "sigma_k", "sawyer_tsigma", "sawyer_t0",
]
NORM_ANALYSES = ["sup_sign_norm", "t0_norm", "s_norm", "embedding_norm"]
CERT_ANALYSES = [
    "cert_alpha_small", "cert_alpha_large", "cert_embedding", "cert_bilinear", "cert_square_function",
]

_RANDOMIZED_SIGN_MODES = {"sampled", "greedy"}


def _validate_config(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a table")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    for key in ("depth", "analyses", "weight_spec_v", "weight_spec_w"):
        if key not in doc:
            raise ConfigError(f"missing config key {key!r}")
    depth = int(doc["depth"])
    if depth < 1:
        raise ConfigError("depth must be >= 1")

    analyses = doc["analyses"]
    if analyses == ["all"] or analyses == "all":
        analyses = list(ANALYSES)
    if not isinstance(analyses, list) or not analyses:
        raise ConfigError("analyses must be a nonempty list of analysis ids")
    unknown = [a for a in analyses if a not in ANALYSES]
    if unknown:
        raise ConfigError(f"unknown analyses: {unknown}")
    if len(set(analyses)) != len(analyses):
        raise ConfigError("duplicate analysis ids")

    modes = dict(_MODE_DEFAULTS)
    got = doc.get("modes", {})
    extra = set(got) - _MODE_KEYS
    if extra:
        raise ConfigError(f"unknown modes keys: {sorted(extra)}")
    modes.update(got)

    if modes["sign_search"] in _RANDOMIZED_SIGN_MODES and "seed" not in modes:
        if any(a in ("sawyer_tsigma", "sup_sign_norm") for a in analyses):
            raise ConfigError("randomized sign search requires modes.seed")
    if any(a in CERT_ANALYSES for a in analyses) and "cert_seed" not in modes:
        raise ConfigError("certificate analyses require modes.cert_seed")

    output = doc.get("output", {})
    extra = set(output) - _OUTPUT_KEYS
    if extra:
        raise ConfigError(f"unknown output keys: {sorted(extra)}")
    if output.get("format", "json") not in ("json", "csv"):
        raise ConfigError("output.format must be 'json' or 'csv'")

    return ScenarioConfig(
        depth=depth,
        analyses=list(analyses),
        weight_spec_v=doc["weight_spec_v"],
        weight_spec_w=doc["weight_spec_w"],
        modes=modes,
        output=dict(output),
    )


def load_config(path: str) -> ScenarioConfig:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid config: {exc}") from exc
    return _validate_config(doc)


def config_from_dict(doc: dict) -> ScenarioConfig:
    return _validate_config(doc)


def run_scenario(cfg: ScenarioConfig) -> AnalysisBundle:
    """Execute the requested analyses; every requested id appears in the bundle
    exactly once, either with a result or with a skip/error record."""
    t0 = time.perf_counter()
    v = generate_weights(cfg.weight_spec_v, cfg.depth)
    w = generate_weights(cfg.weight_spec_w, cfg.depth)

    ordered = [a for a in ANALYSES if a in cfg.analyses]

    def run_one(name):
        try:
            return ANALYSES[name](v, w, cfg.modes)
        except CapacityError as exc:
            return {"skipped": str(exc), "reason": "capacity"}
        except HwlError as exc:
            return {"error": str(exc), "reason": type(exc).__name__}

    nw = worker_count()
    if nw > 1 and len(ordered) > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            results = dict(zip(ordered, pool.map(run_one, ordered)))
    else:
        results = {name: run_one(name) for name in ordered}

    analyses = {name: results[name] for name in ordered}
    seeds = {k: cfg.modes[k] for k in ("seed", "cert_seed") if k in cfg.modes}
    bundle = AnalysisBundle(
        config=cfg.as_document(),
        analyses=analyses,
        metadata={"depth": cfg.depth, "seeds": seeds, "version": __version__},
        wall_time=time.perf_counter() - t0,
    )
    return bundle


def certificate_failures(bundle: AnalysisBundle) -> list[str]:
    """Names of certificate reports in the bundle whose worst margin fails."""
    bad = []
    for name in CERT_ANALYSES:
        entry = bundle.analyses.get(name)
        if isinstance(entry, dict):
            for rep in entry.get("reports", []):
                if not rep.get("ok", True):
                    bad.append(rep["certificate"])
    return bad


def capacity_skips(bundle: AnalysisBundle) -> list[str]:
    return [
        name
        for name, entry in bundle.analyses.items()
        if isinstance(entry, dict) and entry.get("reason") == "capacity"
    ]
