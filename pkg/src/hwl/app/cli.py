"""Command-line interface.

Exit codes: 0 success; 1 invalid config or failed selftest; 2 capacity skip
under --strict; 3 certificate margin violation (a numeric counterexample to a
claimed inequality, the most serious outcome).
"""

from __future__ import annotations

import argparse
import sys

from .. import bellman
from ..errors import ConfigError, HwlError
from . import serialize
from .scenario import (
    NORM_ANALYSES,
    capacity_skips,
    certificate_failures,
    load_config,
    run_scenario,
)
from .search import search_separation
from .selftest import run_selftest


def _write(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _emit_bundle(bundle, cfg, out_override, csv_path, strict) -> int:
    doc = bundle.to_document()
    path = out_override or cfg.output.get("path")
    fmt = cfg.output.get("format", "json")
    text = serialize.to_csv(doc) if fmt == "csv" else serialize.dumps(doc)
    _write(text, path)
    if csv_path:
        _write(serialize.to_csv(doc), csv_path)
    print(f"wall time: {bundle.wall_time:.3f}s", file=sys.stderr)
    bad_certs = certificate_failures(bundle)
    if bad_certs:
        print(f"certificate margin failures: {bad_certs}", file=sys.stderr)
        return 3
    skips = capacity_skips(bundle)
    if skips and strict:
        print(f"capacity skips under --strict: {skips}", file=sys.stderr)
        return 2
    return 0


def _cmd_analyze(args, restrict=None) -> int:
    cfg = load_config(args.config)
    if restrict is not None:
        cfg.analyses = [a for a in cfg.analyses if a in restrict] or list(restrict)
    bundle = run_scenario(cfg)
    return _emit_bundle(bundle, cfg, args.out, args.csv, args.strict)


def _cmd_certify(args) -> int:
    cfg = bellman.SamplerConfig(samples=args.samples, seed=args.seed)
    if args.cert == "alpha_small":
        rep = bellman.cert_alpha_small(args.alpha if args.alpha is not None else 0.25, cfg)
    elif args.cert == "alpha_large":
        rep = bellman.cert_alpha_large(args.alpha if args.alpha is not None else 0.75, cfg)
    elif args.cert == "embedding":
        rep = bellman.cert_embedding(args.c_dom, cfg)
    elif args.cert == "bilinear":
        rep = bellman.cert_bilinear(args.c_dom, cfg)
    elif args.cert == "square_function":
        rep = bellman.cert_square_function(cfg, args.c_dom)
    else:
        raise ConfigError(f"unknown certificate {args.cert!r}")
    doc = {
        "certificate": rep.certificate,
        "samples": rep.samples,
        "worst_margin": rep.worst_margin,
        "best_constant_estimate": rep.best_constant_estimate,
        "failures": rep.failures,
        "seed": rep.seed,
        "ok": bool(rep.ok),
        "info": rep.info,
    }
    _write(serialize.dumps(doc), args.out)
    return 0 if rep.ok else 3


def _cmd_search(args) -> int:
    specimens = search_separation(
        args.cond_from, args.cond_to, args.depth, args.budget, args.seed, args.top
    )
    doc = {
        "from": args.cond_from,
        "to": args.cond_to,
        "depth": args.depth,
        "budget": args.budget,
        "seed": args.seed,
        "specimens": [
            {
                "rank": i,
                "ratio": s.ratio,
                "constant_from": s.constant_from,
                "constant_to": s.constant_to,
                "v_values": s.v_values,
                "w_values": s.w_values,
                "bundle": s.bundle,
            }
            for i, s in enumerate(specimens)
        ],
    }
    _write(serialize.dumps(doc), args.out)
    return 0


def _cmd_selftest(args) -> int:
    doc = run_selftest()
    _write(serialize.dumps(doc), args.out)
    if doc["certificate_failure"]:
        return 3
    return 0 if doc["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hwl", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--out", default=None, help="output path (default: config output.path or stdout)")
        sp.add_argument("--csv", default=None, help="also write a flattened CSV here")
        sp.add_argument("--strict", action="store_true", help="exit 2 on capacity skips")

    sp = sub.add_parser("analyze", help="run the analyses requested in a config file")
    sp.add_argument("config")
    add_common(sp)

    sp = sub.add_parser("norms", help="run only the norm analyses of a config file")
    sp.add_argument("config")
    add_common(sp)

    sp = sub.add_parser("certify", help="run one Bellman certificate")
    sp.add_argument("--cert", required=True,
                    choices=["alpha_small", "alpha_large", "embedding", "bilinear", "square_function"])
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--samples", type=int, default=100000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--c-dom", dest="c_dom", type=float, default=1.0)
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("search", help="search for weight pairs separating two conditions")
    sp.add_argument("--from", dest="cond_from", required=True)
    sp.add_argument("--to", dest="cond_to", required=True)
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--top", type=int, default=5)
    sp.add_argument("--out", default=None)

    sp = sub.add_parser("selftest", help="run the built-in invariant suite (depths <= 4)")
    sp.add_argument("--out", default=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "norms":
            return _cmd_analyze(args, restrict=NORM_ANALYSES)
        if args.command == "certify":
            return _cmd_certify(args)
        if args.command == "search":
            return _cmd_search(args)
        if args.command == "selftest":
            return _cmd_selftest(args)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except HwlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
