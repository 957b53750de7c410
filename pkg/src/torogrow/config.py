"""JSON run configurations (schema ``torogrow/1``): validation and object construction.

Real numbers may be written as the tokens ``"sqrt2m1"`` (``sqrt(2) - 1``) or
``"golden"`` (``(sqrt(5) - 1) / 2``), optionally negated with a leading ``-``.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .conjugacy import Composition, FirstIntegral, LinearMap, Shear, as_map, conjugate
from .errors import InputError
from .systems import Anzai, Automorphism, RandomAnzaiSpec, SkewFlip, SpecialFlowSpec, TwoStep
from .torus import MAX_HARMONICS, CircleFunction, Torus2Function

SCHEMA_VERSION = "torogrow/1"
TOKENS = {"sqrt2m1": float(np.sqrt(2.0) - 1.0), "golden": float((np.sqrt(5.0) - 1.0) / 2.0)}
COMMANDS = ("growth", "lattice", "nilpotent", "conjugate", "random-growth", "drift")

_REAL = {"oneOf": [{"type": "number"},
                   {"type": "string", "pattern": "^-?(sqrt2m1|golden)$"}]}
_INT = {"type": "integer"}
_INT3 = {"type": "array", "items": _INT, "minItems": 3, "maxItems": 3}
_POS = {"type": "integer", "minimum": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


def _coeffs() -> dict:
    return {"type": "array", "items": {"$ref": "#/$defs/real"}, "maxItems": MAX_HARMONICS}


def _matrix(n_min: int, n_max: int) -> dict:
    row = {"type": "array", "items": {"$ref": "#/$defs/real"}, "minItems": n_min, "maxItems": n_max}
    return {"type": "array", "items": row, "minItems": n_min, "maxItems": n_max}


_DEFS = {
    "real": _REAL,
    "circle": _obj({"degree": _INT, "cos": _coeffs(), "sin": _coeffs(), "constant": {"$ref": "#/$defs/real"}}),
    "torus2": _obj({
        "degrees": {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2},
        "terms": {"type": "array", "items": {
            "type": "array", "minItems": 4, "maxItems": 4,
            "prefixItems": [{"type": "integer", "minimum": -MAX_HARMONICS, "maximum": MAX_HARMONICS},
                            {"type": "integer", "minimum": -MAX_HARMONICS, "maximum": MAX_HARMONICS},
                            {"$ref": "#/$defs/real"}, {"$ref": "#/$defs/real"}]}},
        "constant": {"$ref": "#/$defs/real"}}),
    "sign": {"enum": [1, -1]},
    "system": {
        "type": "object",
        "required": ["type"],
        "properties": {"type": {"enum": ["anzai", "skew_flip", "two_step", "automorphism"]}},
        "allOf": [
            {"if": {"properties": {"type": {"const": "anzai"}}},
             "then": _obj({"type": {}, "alpha": {"$ref": "#/$defs/real"}, "phi": {"$ref": "#/$defs/circle"}},
                          ["alpha", "phi"])},
            {"if": {"properties": {"type": {"const": "skew_flip"}}},
             "then": _obj({"type": {}, "alpha": {"$ref": "#/$defs/real"}, "epsilon": {"$ref": "#/$defs/sign"},
                           "phi": {"$ref": "#/$defs/circle"}}, ["alpha", "epsilon", "phi"])},
            {"if": {"properties": {"type": {"const": "two_step"}}},
             "then": _obj({"type": {}, "alpha": {"$ref": "#/$defs/real"}, "beta": {"$ref": "#/$defs/circle"},
                           "gamma": {"$ref": "#/$defs/torus2"}, "flip": {"$ref": "#/$defs/sign"}},
                          ["alpha", "beta", "gamma"])},
            {"if": {"properties": {"type": {"const": "automorphism"}}},
             "then": _obj({"type": {}, "matrix": {"type": "array", "minItems": 2, "maxItems": 3,
                                                  "items": {"type": "array", "items": _INT,
                                                            "minItems": 2, "maxItems": 3}}},
                          ["matrix"])},
        ],
    },
    "chain_item": {"oneOf": [
        _obj({"linear": {"type": "array", "minItems": 2, "maxItems": 2,
                         "items": {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2}}}, ["linear"]),
        _obj({"shear": {"$ref": "#/$defs/circle"}, "axis": {"enum": [0, 1]}}, ["shear"]),
    ]},
}

_COMMON = {"schema": {"const": SCHEMA_VERSION}, "command": {"enum": list(COMMANDS)},
           "seed": {"type": "integer", "minimum": 0}, "description": {"type": "string"},
           "plot": {"type": "boolean"}}

_COMMAND_PROPS: dict[str, tuple[dict, list]] = {
    "growth": ({
        "system": {"$ref": "#/$defs/system"},
        "grid": _obj({"per_axis": _POS}),
        "n_schedule": {"type": "array", "items": _POS, "minItems": 2},
        "tau_hint": {"type": "number"},
        "identities": _obj({"n_probe": _POS, "max_pair_points": _POS}),
    }, ["system"]),
    "lattice": ({"c": _INT3, "members": {"type": "array", "items": _INT3}}, ["c"]),
    "nilpotent": ({"matrix": _matrix(2, 3), "matrix_b": _matrix(3, 3), "tolerance": {"type": "number"}},
                  ["matrix"]),
    "conjugate": ({
        "system": {"$ref": "#/$defs/system"},
        "conjugator": {"type": "array", "items": {"$ref": "#/$defs/chain_item"}},
        "xi": _obj({"p": {"type": "array", "items": _INT, "minItems": 2, "maxItems": 2},
                    "periodic": {"$ref": "#/$defs/torus2"}, "constant": {"$ref": "#/$defs/real"}}, ["p"]),
        "alpha": {"$ref": "#/$defs/real"},
        "grid_sizes": {"type": "array", "items": {"type": "integer", "minimum": 4}, "minItems": 2, "maxItems": 2},
        "ode_step": {"type": "number", "exclusiveMinimum": 0},
        "tolerances": _obj({"hypothesis": {"type": "number"}, "residual": {"type": "number"},
                            "tau": {"type": "number"}}),
        "max_harmonics": _POS,
    }, ["system", "xi", "alpha"]),
    "random-growth": ({
        "theta": {"$ref": "#/$defs/real"},
        "alpha": {"$ref": "#/$defs/circle"},
        "degree": _INT,
        "constant": {"$ref": "#/$defs/circle"},
        "cos": {"type": "array", "items": {"$ref": "#/$defs/circle"}, "maxItems": MAX_HARMONICS},
        "sin": {"type": "array", "items": {"$ref": "#/$defs/circle"}, "maxItems": MAX_HARMONICS},
        "samples": _POS,
        "n": _POS,
    }, ["theta", "alpha", "samples", "n"]),
    "drift": ({
        "a": {"$ref": "#/$defs/real"},
        "b": {"$ref": "#/$defs/circle"},
        "alpha": {"$ref": "#/$defs/real"},
        "beta": {"$ref": "#/$defs/circle"},
        "n_values": {"type": "array", "items": _POS, "minItems": 1},
        "grid": _obj({"n1": _POS, "n2": _POS}),
    }, ["a", "b", "alpha", "n_values"]),
}


def command_schema(command: str) -> dict:
    props, required = _COMMAND_PROPS[command]
    return {"$schema": "https://json-schema.org/draft/2020-12/schema", "$defs": _DEFS,
            **_obj({**_COMMON, **props}, ["schema", "command", *required])}


def schema() -> dict:
    """The published top-level schema (dispatching on ``command``)."""
    branches = [{"if": {"properties": {"command": {"const": c}}}, "then": {"$ref": f"#/$defs/command_{c}"}}
                for c in COMMANDS]
    defs = dict(_DEFS)
    for c in COMMANDS:
        props, required = _COMMAND_PROPS[c]
        defs[f"command_{c}"] = _obj({**_COMMON, **props}, ["schema", "command", *required])
    return {"$schema": "https://json-schema.org/draft/2020-12/schema", "$id": SCHEMA_VERSION,
            "type": "object", "required": ["schema", "command"],
            "properties": {"command": {"enum": list(COMMANDS)}}, "allOf": branches, "$defs": defs}


class ConfigError(InputError):
    """Schema violations; ``errors`` holds ``(json_pointer, message)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p or '/'}: {m}" for p, m in errors))


def _pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def _leaf_errors(err) -> list:
    # descend into oneOf/anyOf/allOf to report the most specific failures
    if err.context:
        out = []
        for sub in err.context:
            out.extend(_leaf_errors(sub))
        return out
    return [err]


def validate(cfg: Any) -> None:
    """Raise :class:`ConfigError` listing every violation with its JSON-pointer path."""
    if not isinstance(cfg, dict):
        raise ConfigError([("", "configuration must be a JSON object")])
    base = {"type": "object", "required": ["schema", "command"],
            "properties": {"schema": {"const": SCHEMA_VERSION}, "command": {"enum": list(COMMANDS)}}}
    errs = sorted(jsonschema.Draft202012Validator(base).iter_errors(cfg), key=lambda e: list(e.path))
    if not errs:
        v = jsonschema.Draft202012Validator(command_schema(cfg["command"]))
        errs = sorted(v.iter_errors(cfg), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errs:
        found = []
        for e in errs:
            for leaf in _leaf_errors(e):
                item = (_pointer(leaf.absolute_path), leaf.message)
                if item not in found:
                    found.append(item)
        raise ConfigError(found)


def load(path) -> dict:
    """Read and validate a configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    validate(cfg)
    return cfg


def fixture_names() -> list[str]:
    root = resources.files("torogrow") / "fixtures"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def fixture_path(name: str):
    p = resources.files("torogrow") / "fixtures" / f"{name}.json"
    if not p.is_file():
        raise InputError(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
    return p


def load_fixture(name: str) -> dict:
    cfg = json.loads(fixture_path(name).read_text())
    validate(cfg)
    return cfg


# --- builders -----------------------------------------------------------

def real(v) -> float:
    if isinstance(v, str):
        neg = v.startswith("-")
        key = v[1:] if neg else v
        if key not in TOKENS:
            raise InputError(f"unknown numeric token {v!r}")
        return -TOKENS[key] if neg else TOKENS[key]
    return float(v)


def circle(d: dict | None) -> CircleFunction:
    d = d or {}
    return CircleFunction(d.get("degree", 0), [real(c) for c in d.get("cos", [])],
                          [real(s) for s in d.get("sin", [])], real(d.get("constant", 0.0)))


def torus2(d: dict | None) -> Torus2Function:
    d = d or {}
    terms = tuple((int(k1), int(k2), real(a), real(b)) for k1, k2, a, b in d.get("terms", []))
    return Torus2Function(tuple(d.get("degrees", (0, 0))), terms, real(d.get("constant", 0.0)))


def system(d: dict):
    kind = d["type"]
    if kind == "anzai":
        return Anzai(real(d["alpha"]), circle(d["phi"]))
    if kind == "skew_flip":
        return SkewFlip(real(d["alpha"]), int(d["epsilon"]), circle(d["phi"]))
    if kind == "two_step":
        return TwoStep(real(d["alpha"]), circle(d["beta"]), torus2(d["gamma"]), int(d.get("flip", 1)))
    if kind == "automorphism":
        rows = d["matrix"]
        if any(len(r) != len(rows) for r in rows):
            raise InputError("automorphism matrix must be square")
        return Automorphism(tuple(tuple(int(v) for v in r) for r in rows))
    raise InputError(f"unknown system type {kind!r}")


def chain(items: list) -> Composition | None:
    maps = []
    for it in items:
        if "linear" in it:
            maps.append(LinearMap(tuple(tuple(r) for r in it["linear"])))
        else:
            maps.append(Shear(circle(it["shear"]), int(it.get("axis", 0))))
    return Composition(tuple(maps)) if maps else None


def conjugate_map(cfg: dict):
    """``C o T o C^-1`` with ``C`` the conjugator chain (identity if absent)."""
    base = system(cfg["system"])
    C = chain(cfg.get("conjugator", []))
    return conjugate(C, base) if C is not None else as_map(base)


def first_integral(d: dict) -> FirstIntegral:
    return FirstIntegral(tuple(d["p"]), torus2(d.get("periodic")), real(d.get("constant", 0.0)))


def random_anzai(cfg: dict) -> RandomAnzaiSpec:
    return RandomAnzaiSpec(real(cfg["theta"]), circle(cfg["alpha"]), int(cfg.get("degree", 0)),
                           circle(cfg.get("constant")), tuple(circle(c) for c in cfg.get("cos", [])),
                           tuple(circle(s) for s in cfg.get("sin", [])))


def special_flow(cfg: dict) -> SpecialFlowSpec:
    return SpecialFlowSpec(real(cfg["a"]), circle(cfg["b"]), real(cfg["alpha"]), circle(cfg.get("beta")))
