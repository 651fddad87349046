"""Versioned JSON job configuration and system construction."""

import json
from dataclasses import dataclass, field

import jsonschema

from . import catalogue
from .base_space import Base, BaseMap, BaseSpace
from .henon import MAX_FACTOR_DEGREE, MAX_FACTORS, CoefPoly, HenonFactor, SkewHenonSystem
from .pk import PkSkewSystem

SCHEMA_VERSION = 1
JOBS = ("render-julia", "green-eval", "measure", "convergence", "entropy", "pk-basin", "pk-fatou", "verify-all")
MAX_RES = 4096

_complex = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}
_triple = {
    "type": "array",
    "prefixItems": [{"type": "integer", "minimum": 0}, {"type": "integer", "minimum": 0}, _complex],
    "minItems": 3,
    "maxItems": 3,
}
_poly = {"type": "array", "items": _triple}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "system"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "job": {"enum": list(JOBS)},
        "seed": {"type": "integer", "minimum": 0},
        "lambda": _complex,
        "system": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["builtin"],
                    "additionalProperties": False,
                    "properties": {"builtin": {"enum": sorted(catalogue.HENON) + sorted(catalogue.PK)}},
                },
                {
                    "type": "object",
                    "required": ["kind", "base", "factors"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"const": "henon"},
                        "name": {"type": "string"},
                        "base": {"$ref": "#/$defs/base"},
                        "factors": {
                            "type": "array",
                            "minItems": 1,
                            "maxItems": MAX_FACTORS,
                            "items": {
                                "type": "object",
                                "required": ["degree"],
                                "additionalProperties": False,
                                "properties": {
                                    "degree": {"type": "integer", "minimum": 2, "maximum": MAX_FACTOR_DEGREE},
                                    "lower": {"type": "array", "items": _poly},
                                    "a": _poly,
                                },
                            },
                        },
                    },
                },
                {
                    "type": "object",
                    "required": ["kind", "base", "k", "degree", "components"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"const": "pk"},
                        "name": {"type": "string"},
                        "base": {"$ref": "#/$defs/base"},
                        "k": {"type": "integer", "minimum": 1, "maximum": 4},
                        "degree": {"type": "integer", "minimum": 2, "maximum": 8},
                        "components": {
                            "type": "array",
                            "items": {
                                "type": "array",
                                "minItems": 1,
                                "items": {
                                    "type": "object",
                                    "required": ["exps", "coef"],
                                    "additionalProperties": False,
                                    "properties": {
                                        "exps": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                                        "coef": _poly,
                                    },
                                },
                            },
                        },
                    },
                },
            ]
        },
        "params": {
            "type": "object",
            "properties": {
                "res": {"type": "integer", "minimum": 8, "maximum": MAX_RES},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "half_width": {"type": "number", "exclusiveMinimum": 0},
                "samples": {"type": "integer", "minimum": 1, "maximum": 1_000_000},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "count": {"type": "integer", "minimum": 100, "maximum": 1_000_000},
                "n_max": {"type": "integer", "minimum": 1, "maximum": 200},
                "band": {"type": "number", "exclusiveMinimum": 0},
                "x0": _complex,
                "center": _complex,
                "points": {"type": "array", "items": {"type": "array", "items": _complex, "minItems": 2, "maxItems": 2}},
            },
        },
    },
    "$defs": {
        "base": {
            "type": "object",
            "required": ["space", "map"],
            "additionalProperties": False,
            "properties": {
                "space": {
                    "type": "object",
                    "required": ["kind"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": ["disc", "circle", "interval", "finite"]},
                        "radius": {"type": "number", "exclusiveMinimum": 0},
                        "lo": {"type": "number"},
                        "hi": {"type": "number"},
                        "points": {"type": "array", "items": _complex, "minItems": 1},
                    },
                },
                "map": {
                    "type": "object",
                    "required": ["kind"],
                    "additionalProperties": False,
                    "properties": {
                        "kind": {"enum": ["identity", "contraction", "rotation", "permutation"]},
                        "c": _complex,
                        "theta": {"type": "number"},
                        "table": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                    },
                },
            },
        }
    },
}


class ConfigError(ValueError):
    """Schema or semantic violation; `pointer` is the JSON pointer of the offending value."""

    def __init__(self, pointer, message):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def _pointer(path):
    return "".join(f"/{p}" for p in path)


def to_complex(v):
    return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)


def _poly_from(triples):
    return CoefPoly.from_triples([(p, q, to_complex(c)) for p, q, c in triples])


def validate(doc):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        # the deepest error under a oneOf is the informative one
        err = max(errors, key=lambda e: len(e.absolute_path))
        best = jsonschema.exceptions.best_match([err]) or err
        ctx = [c for c in best.context] if best.context else []
        if ctx:
            best = max(ctx, key=lambda e: len(e.absolute_path))
        raise ConfigError(_pointer(best.absolute_path), best.message)


def build_base(doc):
    sp, mp = doc["space"], doc["map"]
    space = BaseSpace(
        sp["kind"],
        radius=sp.get("radius", 1.0),
        lo=sp.get("lo", 0.0),
        hi=sp.get("hi", 1.0),
        points=tuple(to_complex(p) for p in sp.get("points", ())),
    )
    bmap = BaseMap(mp["kind"], c=to_complex(mp.get("c", 1.0)), theta=mp.get("theta", 0.0), table=tuple(mp.get("table", ())))
    return Base(space, bmap)


def build_system(doc, where="/system"):
    """SkewHenonSystem or PkSkewSystem from a validated system object."""
    try:
        if "builtin" in doc:
            return catalogue.get(doc["builtin"])
        base = build_base(doc["base"])
        if doc["kind"] == "henon":
            factors = [
                HenonFactor(
                    f["degree"],
                    tuple(_poly_from(t) for t in f.get("lower", ())),
                    _poly_from(f["a"]) if "a" in f else CoefPoly.const(1.0),
                )
                for f in doc["factors"]
            ]
            return SkewHenonSystem(base, factors, name=doc.get("name", "custom"))
        comps = [[(m["exps"], [(p, q, to_complex(c)) for p, q, c in m["coef"]]) for m in comp] for comp in doc["components"]]
        return PkSkewSystem.from_spec(base, doc["k"], doc["degree"], comps, name=doc.get("name", "custom"))
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(where, str(exc)) from exc


@dataclass
class JobConfig:
    system_doc: dict
    system: object
    job: str = None
    seed: int = 0
    lam: complex = 0j
    params: dict = field(default_factory=dict)


def parse(doc):
    validate(doc)
    system = build_system(doc["system"])
    lam = to_complex(doc.get("lambda", 0.0))
    try:
        lam = system.base.space.check(lam)
    except ValueError as exc:
        raise ConfigError("/lambda", str(exc)) from exc
    return JobConfig(doc["system"], system, doc.get("job"), doc.get("seed", 0), lam, dict(doc.get("params", {})))


def load(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"invalid JSON: {exc}") from exc
    return parse(doc)
