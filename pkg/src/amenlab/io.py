"""Run configuration loading, schema validation and deterministic report writing."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import __version__


class ConfigError(ValueError):
    """The configuration is malformed or inconsistent."""


_GROUP = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["free", "free-abelian", "finite", "cyclic", "symmetric"]},
        "rank": {"type": "integer", "minimum": 1},
        "order": {"type": "integer", "minimum": 1},
        "degree": {"type": "integer", "minimum": 2},
        "names": {"type": "array", "items": {"type": "string"}},
        "table": {"type": "array"},
        "generators": {"type": "array"},
    },
    "required": ["kind"],
}

_SPACE = {
    "type": "object",
    "properties": {
        "type": {"enum": ["boundary", "point", "regular", "finite"]},
        "labels": {"type": "array"},
        "action": {"type": "object"},
    },
    "required": ["type"],
}

_RANGE = {
    "oneOf": [
        {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        {"type": "object", "properties": {"start": {"type": "integer", "minimum": 1},
                                          "stop": {"type": "integer", "minimum": 1}},
         "required": ["start", "stop"], "additionalProperties": False},
    ]
}

SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"enum": ["defect", "lp-search", "pipeline"]},
        "group": _GROUP,
        "space": _SPACE,
        "generators": {"type": "array", "items": {"type": "string"}},
        "seed": {"type": "integer", "minimum": 0},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "threshold": {"type": "number", "exclusiveMinimum": 0},
        "mean": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["folner", "prefix", "uniform", "weights"]},
                "n": {"type": "integer", "minimum": 1},
                "weights": {"type": "object", "additionalProperties": {"type": "number"}},
            },
            "required": ["kind"],
        },
        "n": _RANGE,
        "window": {"type": "object", "properties": {"radius": {"type": "integer", "minimum": 0}},
                   "required": ["radius"]},
        "depth": {"type": "integer", "minimum": 0},
        "exact": {"type": "boolean"},
        "rule": {"enum": ["bland", "dantzig"]},
        "max_variables": {"type": "integer", "minimum": 1},
        "module": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["product", "boundary-z", "document"]},
                "blocks": {"type": "integer", "minimum": 1},
                "period": {"type": "integer", "minimum": 1},
                "doc": {"type": "object"},
            },
            "required": ["kind"],
        },
        "derivation": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["inner", "document"]},
                "doc": {"type": "object"},
            },
            "required": ["kind"],
        },
        "expectation": {
            "type": "object",
            "properties": {"eps": {"type": "number", "exclusiveMinimum": 0}},
        },
        "residual_threshold": {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, {"const": "bound"}]},
    },
    "required": ["command", "group"],
    "additionalProperties": False,
}


def load_config(path):
    """Parse and validate a YAML configuration; returns ``(config, sha256 of the file bytes)``."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    validate_config(cfg)
    return cfg, hashlib.sha256(raw).hexdigest()


def validate_config(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    if "generators" in cfg and not cfg["generators"]:
        raise ConfigError("generator list is empty")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return _plain(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, float):
        if not np.isfinite(obj):
            return str(obj)
        return obj + 0.0  # folds -0.0 into 0.0
    return obj


def dumps(doc):
    """Canonical JSON: sorted keys, fixed separators, shortest round-trip floats."""
    return json.dumps(_plain(doc), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def stamp(doc, config_hash, seed):
    out = dict(doc)
    out["tool"] = {"name": "amenlab", "version": __version__}
    out["config_sha256"] = config_hash
    out["seed"] = seed
    return out


def write_json(path, doc):
    Path(path).write_text(dumps(doc), encoding="utf-8")


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
