"""JSON schema for experiment configs (mirrored to docs/config.schema.json)."""

_NUM_GRID = {
    "oneOf": [
        {"type": "number", "exclusiveMinimum": 0},
        {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
    ]
}

_SYSTEM = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["finite-map", "circle-rotation", "full-shift", "tent-map", "product", "iterate"]},
        "params": {"type": "object"},
    },
    "additionalProperties": False,
}

_REQUEST = {
    "type": "object",
    "required": ["property"],
    "properties": {
        "property": {
            "type": "string",
            "pattern": r"^(average-shadowing|weak-aasp|classify|chain|density|sensitivity|M_(alpha|upper_alpha|upper|lower)(:[0-9.]+)?|M_hat_1)$",
        },
        "epsilon": _NUM_GRID,
        "delta": _NUM_GRID,
        "alpha": {"type": "number", "minimum": 0, "maximum": 1},
        "type": {"enum": ["delta-pseudo", "delta-ergodic", "delta-average", "delta-asymptotic-average",
                          "asymptotic-average"]},
        "candidates": {
            "oneOf": [
                {"enum": ["auto", "epsilon-net", "orbit-samples"]},
                {"type": "object", "required": ["net"], "properties": {"net": {"type": "number", "exclusiveMinimum": 0}},
                 "additionalProperties": False},
                {"type": "array", "minItems": 1},
            ]
        },
        "net": {"type": "number", "exclusiveMinimum": 0},
        "closed_form": {"enum": ["linear-blocks", "exponential-blocks", "squares", "full"]},
        "family": {"type": "string"},
        "center": {},
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "k": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "shadowlab experiment config",
    "type": "object",
    "required": ["horizon"],
    "properties": {
        "system": {"oneOf": [_SYSTEM, {"type": "null"}]},
        "construction": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["name"],
                    "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
                    "additionalProperties": False,
                },
                {"type": "null"},
            ]
        },
        "verify": {"type": "array", "items": _REQUEST},
        "horizon": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": ["string", "null"]},
        "tolerances": {
            "type": "object",
            "properties": {
                "density": {"type": "number", "exclusiveMinimum": 0},
                "boundary": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}
