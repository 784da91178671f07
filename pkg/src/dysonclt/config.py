"""Configuration files: JSON schema, validation and bundled presets."""
import json
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import ConfigError

SCHEMA_VERSION = 1

_index_set = {
    "oneOf": [
        {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        {"type": "object", "properties": {"prefix": {"type": "integer", "minimum": 1}},
         "required": ["prefix"], "additionalProperties": False},
        {"type": "object",
         "properties": {"range": {"type": "array", "items": {"type": "integer", "minimum": 1},
                                  "minItems": 2, "maxItems": 2}},
         "required": ["range"], "additionalProperties": False},
    ]
}

_covariance = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["ou", "constant", "table"]},
        "rate": {"type": "number", "exclusiveMinimum": 0},
        "value": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "grid": {"type": "array", "items": {"type": "number"}, "minItems": 2},
        "values": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
    },
    "additionalProperties": False,
}

_profile = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["constant", "linear", "exponential"]},
        "value": {"type": "number"},
        "intercept": {"type": "number"},
        "slope": {"type": "number"},
        "scale": {"type": "number"},
        "rate": {"type": "number"},
    },
    "additionalProperties": False,
}

_observable = {
    "type": "object",
    "required": ["set", "statistic"],
    "properties": {
        "set": {"type": "string"},
        "statistic": {"enum": ["power", "chebyshev"]},
        "time": {"type": "number"},
        "times": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "k": {"type": "integer", "minimum": 1},
        "degrees": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
    },
    "allOf": [
        {"oneOf": [{"required": ["time"]}, {"required": ["times"]}]},
        {"oneOf": [{"required": ["k"]}, {"required": ["degrees"]}]},
    ],
    "additionalProperties": False,
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "L": {"type": "number", "exclusiveMinimum": 0},
        "ambient_dim": {"type": "integer", "minimum": 1},
        "entry": {
            "type": "object",
            "properties": {
                "beta": {"enum": [1, 2]},
                "family": {"enum": ["gaussian", "threepoint", "static_iid"]},
                "distribution": {"enum": ["gaussian", "threepoint"]},
                "covariance": _covariance,
            },
            "additionalProperties": False,
        },
        "times": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "sets": {"type": "object", "additionalProperties": _index_set, "minProperties": 1},
        "observables": {"type": "array", "items": _observable, "minItems": 1},
        "n_samples": {"type": "integer", "minimum": 100},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "z_max": {"type": "number", "exclusiveMinimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "section": {
            "type": "object",
            "required": ["phi", "psi"],
            "properties": {
                "phi": _profile,
                "psi": _profile,
                "t0": {"type": "number"},
                "t_range": {"type": "array", "items": {"type": "number"},
                            "minItems": 2, "maxItems": 2},
            },
            "additionalProperties": False,
        },
        "kernel_grid": {
            "type": "object",
            "properties": {
                "x": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "t": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "reference": {"type": "array", "items": {"type": "number"},
                              "minItems": 2, "maxItems": 2},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

EXPERIMENT_KEYS = ("L", "entry", "times", "sets", "observables")


class SchemaError(ConfigError):
    """Schema violations, each reported with its JSON-pointer path."""

    def __init__(self, errors):
        self.errors = errors
        lines = [f"{ptr or '/'}: {msg}" for ptr, msg in errors]
        super().__init__("config does not match the schema:\n  " + "\n  ".join(lines))


def _pointer(path):
    parts = [str(p).replace("~", "~0").replace("/", "~1") for p in path]
    return "/" + "/".join(parts) if parts else ""


def validate(cfg):
    """Raise ``SchemaError`` listing every violation as ``(pointer, message)``."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(validator.iter_errors(cfg), key=lambda e: list(map(str, e.absolute_path)))
    if errs:
        raise SchemaError([(_pointer(e.absolute_path), e.message) for e in errs])
    return cfg


def preset_names():
    root = resources.files("dysonclt") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve(ref):
    """Path to a config file, or the bundled preset of that name; ``None`` if neither."""
    p = Path(ref)
    if p.is_file():
        return p
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    cand = resources.files("dysonclt") / "presets" / f"{stem}.json"
    if cand.is_file():
        return cand
    return None


def load(ref):
    """Read and validate a config given as a path or preset name."""
    path = resolve(ref)
    if path is None:
        raise FileNotFoundError(f"no config file or preset named {ref!r}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{ref}: invalid JSON ({exc})") from exc
    return validate(cfg)


def require_experiment(cfg, need_samples=True):
    keys = EXPERIMENT_KEYS + (("n_samples",) if need_samples else ())
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigError("config lacks experiment fields: " + ", ".join(f"/{k}" for k in missing))
