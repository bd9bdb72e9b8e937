"""Exact round-trip serialization of analysis bundles.

Floats are written as canonical hex strings plus a human-readable decimal
mirror, so serialize -> load is bit-exact and two identical runs produce
byte-identical documents.
"""

from __future__ import annotations

import json

import numpy as np


def encode(obj):
    """Recursively convert a result object into JSON-safe data with exact floats."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (int, str)) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        f = float(obj)  # np.float64 subclasses float but reprs differently
        return {"hex": f.hex(), "dec": repr(f)}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [encode(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(x) for x in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}: {obj!r}")


def decode(obj):
    """Inverse of encode: hex/dec float records become floats again."""
    if isinstance(obj, dict):
        if set(obj) == {"hex", "dec"}:
            return float.fromhex(obj["hex"])
        return {k: decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [decode(x) for x in obj]
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(encode(doc), sort_keys=True, indent=1) + "\n"


def loads(text: str) -> dict:
    return decode(json.loads(text))


def to_csv(doc: dict) -> str:
    """Flatten a raw bundle document: per-interval maps become heap-ordered
    (level, pos, value) rows; scalar fields leave level and pos empty.
    Decimal values only; the JSON document is the exact record."""
    lines = ["analysis,field,level,pos,value"]

    def emit(analysis, f, level, pos, value):
        if isinstance(value, (float, np.floating)):
            value = repr(float(value))
        lines.append(f"{analysis},{f},{level},{pos},{value}")

    def walk(name, prefix, entry):
        for f in sorted(entry):
            val = entry[f]
            label = f"{prefix}{f}"
            if f == "per_interval":
                seq = val.tolist() if isinstance(val, np.ndarray) else list(val)
                level, count, pos = 0, 1, 0
                for x in seq:
                    if pos == count:
                        level, pos, count = level + 1, 0, count * 2
                    emit(name, label, level, pos, x)
                    pos += 1
            elif isinstance(val, dict):
                walk(name, f"{label}.", val)
            elif isinstance(val, (bool, int, float, str, np.integer, np.floating)):
                emit(name, label, "", "", val)

    for name in sorted(doc.get("analyses", {})):
        entry = doc["analyses"][name]
        if isinstance(entry, dict):
            walk(name, "", entry)
    return "\n".join(lines) + "\n"
