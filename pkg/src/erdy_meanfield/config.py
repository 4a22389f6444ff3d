"""Strict JSON run configuration.

A document has up to five sections: ``model``, ``graph``, ``dynamics``,
``study`` and ``output``. Unknown keys anywhere are rejected so a typo fails
loudly instead of silently falling back to a default.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .errors import ErdyError

__all__ = ["ConfigError", "SCHEMA", "SCHEMA_VERSION", "load_config", "validate_config"]

SCHEMA_VERSION = "config-v1"

_NUM_POS = {"type": "number", "exclusiveMinimum": 0}
_NUM_NONNEG = {"type": "number", "minimum": 0}
_SEED = {"type": "integer", "minimum": 0, "maximum": 2**64 - 1}


def _params(props, required=()):
    return {
        "type": "object",
        "properties": props,
        "required": list(required),
        "additionalProperties": False,
    }


def _variant(field, name, params):
    return {
        "if": {"properties": {field: {"const": name}}, "required": [field]},
        "then": {"properties": {"parameters": params}},
    }


_MODEL = {
    "type": "object",
    "required": ["type"],
    "additionalProperties": False,
    "properties": {
        "type": {"enum": ["sis", "sir", "voter", "quadratic"]},
        "parameters": {"type": "object"},
        "M": {"type": "number", "exclusiveMinimum": 1},
    },
    "allOf": [
        _variant("type", "sis", _params({"beta": _NUM_NONNEG, "gamma": _NUM_NONNEG})),
        _variant("type", "sir", _params({"beta": _NUM_NONNEG, "gamma": _NUM_NONNEG})),
        _variant("type", "voter", _params({"lam": _NUM_NONNEG})),
        _variant("type", "quadratic", _params({"beta": _NUM_NONNEG, "gamma": _NUM_NONNEG})),
    ],
}

_WEIGHTS = {
    "type": "object",
    "required": ["type"],
    "additionalProperties": False,
    "properties": {
        "type": {"enum": ["unweighted", "constant", "exponential", "uniform", "lognormal"]},
        "parameters": {"type": "object"},
    },
    "allOf": [
        _variant("type", "unweighted", _params({})),
        _variant("type", "constant", _params({"value": _NUM_POS})),
        _variant("type", "exponential", _params({"mean": _NUM_POS})),
        _variant("type", "uniform", _params({"lo": _NUM_NONNEG, "hi": _NUM_POS}, ["lo", "hi"])),
        _variant("type", "lognormal", _params({"logmean": {"type": "number"}, "logsd": _NUM_NONNEG})),
    ],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "model": _MODEL,
        "graph": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n", "p"],
            "properties": {
                "n": {"type": "integer", "minimum": 2},
                "p": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "weights": _WEIGHTS,
                "seed": _SEED,
            },
        },
        "dynamics": {
            "type": "object",
            "additionalProperties": False,
            "required": ["horizon"],
            "properties": {
                "horizon": _NUM_POS,
                "u0": {"type": "array", "items": _NUM_NONNEG, "minItems": 2},
                "init": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "init_mode": {"enum": ["deterministic", "multinomial"]},
                "sample_points": {"type": "integer", "minimum": 2},
                "seed": _SEED,
            },
            "oneOf": [{"required": ["u0"]}, {"required": ["init"]}],
        },
        "study": {
            "type": "object",
            "additionalProperties": False,
            "required": ["ladder"],
            "properties": {
                "ladder": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
                "replications": {"type": "integer", "minimum": 1},
                "master_seed": _SEED,
                "p_rule": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["alpha"],
                    "properties": {"alpha": _NUM_NONNEG, "scale": _NUM_POS},
                },
                "M": {"type": "number", "exclusiveMinimum": 1},
                "r2_cap": {"type": "integer", "minimum": 2},
                "r2_pairs": {"type": "integer", "minimum": 1},
                "diagnostics": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "r1": {"type": "boolean"},
                        "r2": {"enum": ["auto", "exact", "sampled", "off"]},
                        "k": {"type": "boolean"},
                        "h": {"type": "boolean"},
                        "gronwall": {"type": "boolean"},
                        "nimfa": {"type": "boolean"},
                    },
                },
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["csv"]}},
                "per_vertex_nimfa": {"type": "boolean"},
                "event_log": {"type": "boolean"},
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


class ConfigError(ErdyError, ValueError):
    """Invalid or unreadable configuration (exit code 2)."""


def _describe(err):
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{where}: {err.message}"


def validate_config(doc):
    """Raise :class:`ConfigError` listing every schema violation."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigError("invalid config:\n  " + "\n  ".join(_describe(e) for e in errors))
    return doc


def load_config(path):
    """Read and validate a JSON config file."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return validate_config(doc)


def require(doc, section):
    """Return a section, failing as a config error when absent."""
    if section not in doc:
        raise ConfigError(f"config is missing required section {section!r}")
    return doc[section]
