"""Campaign configuration: JSON schema, defaults and domain presets."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .domains import ConvexDomain, HalfPlane, Hyperbola, Parabola, sector_approx
from .rational import RationalFunction

__all__ = ["ConfigError", "CampaignConfig", "parse_config", "serialize_config",
           "make_domain", "default_functions", "DEFAULT_CONFIG"]


class ConfigError(ValueError):
    """Schema violation; ``pointer`` is the JSON pointer of the offending field."""

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


_NUM = {"type": "number"}
_CPLX = {"type": "object", "properties": {"re": _NUM, "im": _NUM}, "required": ["re"],
         "additionalProperties": False}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["domains"],
    "properties": {
        "domains": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["halfplane", "hyperbola", "parabola", "sector-approx"]},
                    "a": {"type": "number", "exclusiveMinimum": 0},
                    "b": {"type": "number", "exclusiveMinimum": 0},
                    "p": {"type": "number", "exclusiveMinimum": 0},
                    "alpha": {"type": "number", "exclusiveMinimum": 0,
                              "exclusiveMaximum": math.pi / 2},
                },
                "additionalProperties": False,
            },
        },
        "ensembles": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["kind"],
                "properties": {
                    "kind": {"enum": ["ginibre", "jordan", "normal"]},
                    "n": {"type": "integer", "minimum": 1, "maximum": 512},
                    "count": {"type": "integer", "minimum": 1},
                    "margin": {"type": "number", "exclusiveMinimum": 0},
                },
                "additionalProperties": False,
            },
        },
        "functions": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "string"},
                    "poles": {"type": "array", "items": {
                        "type": "object",
                        "properties": {"re": _NUM, "im": _NUM,
                                       "order": {"type": "integer", "minimum": 1}},
                        "required": ["re"], "additionalProperties": False}},
                    "terms": {"type": "array", "items": {"type": "array", "items": _CPLX}},
                    "inf": _CPLX,
                },
                "additionalProperties": False,
            },
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "quad": {"type": "number", "minimum": 1e-12, "maximum": 1e-2},
                "bound_slack_factor": {"type": "number", "exclusiveMinimum": 0},
                "ratio_slack": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "n_angles": {"type": "integer", "minimum": 16},
        "lemma1_samples": {"type": "integer", "minimum": 4},
        "damping_eps": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "outputs": {
            "type": "object",
            "properties": {
                "csv_path": {"type": ["string", "null"]},
                "json_path": {"type": ["string", "null"]},
                "svg_path": {"type": ["string", "null"]},
            },
            "additionalProperties": False,
        },
    },
}

DEFAULT_ENSEMBLES = [
    {"kind": "ginibre", "n": 8, "count": 60, "margin": 0.1},
    {"kind": "jordan", "n": 8, "count": 20, "margin": 0.1},
    {"kind": "normal", "n": 8, "count": 20, "margin": 0.1},
]

DEFAULT_CONFIG = {
    "domains": [{"kind": "halfplane"}, {"kind": "hyperbola", "a": 1.0, "b": 1.0},
                {"kind": "parabola", "p": 1.0}],
    "seed": 20240601,
}


def default_functions(seed: int) -> list[dict]:
    """Resolvent, Cayley-type, squared resolvent and a seeded three-pole sum."""
    out = []
    f = RationalFunction.resolvent(-1.0)
    out.append({"id": "resolvent", **f.to_dict()})
    f = RationalFunction.mobius(1.0, -1.0, 1.0, 1.0)
    out.append({"id": "cayley", **f.to_dict()})
    f = RationalFunction.resolvent(-0.5, order=2)
    out.append({"id": "resolvent2", **f.to_dict()})
    rng = np.random.default_rng(seed)
    re = -(0.05 + np.abs(rng.standard_normal(3)))
    im = 2.0 * rng.standard_normal(3)
    res = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    f = RationalFunction([(complex(a, b), 1) for a, b in zip(re, im)], [[c] for c in res])
    out.append({"id": "random3", **f.to_dict()})
    return out


def make_domain(d: dict) -> ConvexDomain:
    kind = d["kind"]
    if kind == "halfplane":
        return HalfPlane()
    if kind == "hyperbola":
        return Hyperbola(float(d.get("a", 1.0)), float(d.get("b", 1.0)))
    if kind == "parabola":
        return Parabola(float(d.get("p", 1.0)))
    if kind == "sector-approx":
        return sector_approx(float(d["alpha"]), float(d.get("a", 1e-3)))
    raise ConfigError(f"unknown domain kind {kind!r}", "/kind")


@dataclass
class CampaignConfig:
    domains: list
    ensembles: list = field(default_factory=lambda: copy.deepcopy(DEFAULT_ENSEMBLES))
    functions: list = field(default_factory=list)
    quad_tol: float = 1e-8
    bound_slack_factor: float = 10.0
    ratio_slack: float = 1e-6
    n_angles: int = 256
    lemma1_samples: int = 32
    damping_eps: float = 0.1
    seed: int = 0
    outputs: dict = field(default_factory=lambda: {"csv_path": None, "json_path": None,
                                                  "svg_path": None})

    def domain_objects(self) -> list[ConvexDomain]:
        return [make_domain(d) for d in self.domains]

    def to_dict(self) -> dict:
        return {
            "domains": copy.deepcopy(self.domains),
            "ensembles": copy.deepcopy(self.ensembles),
            "functions": copy.deepcopy(self.functions),
            "tolerances": {"quad": self.quad_tol, "bound_slack_factor": self.bound_slack_factor,
                           "ratio_slack": self.ratio_slack},
            "n_angles": self.n_angles,
            "lemma1_samples": self.lemma1_samples,
            "damping_eps": self.damping_eps,
            "seed": self.seed,
            "outputs": dict(self.outputs),
        }


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def parse_config(text) -> CampaignConfig:
    """Validate a JSON document (string or already-parsed dict) and fill defaults."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc}") from exc
    else:
        doc = copy.deepcopy(text)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(e.message, _pointer(e.absolute_path))
    for i, d in enumerate(doc["domains"]):
        if d["kind"] == "sector-approx" and "alpha" not in d:
            raise ConfigError("sector-approx needs 'alpha'", f"/domains/{i}/alpha")
        try:
            make_domain(d)
        except ValueError as exc:
            raise ConfigError(str(exc), f"/domains/{i}") from exc
    seed = int(doc.get("seed", 0))
    ens = [dict({"n": 8, "count": 1, "margin": 0.1}, **e) for e in doc.get("ensembles", [])] \
        if "ensembles" in doc else copy.deepcopy(DEFAULT_ENSEMBLES)
    funcs = doc.get("functions") or default_functions(seed)
    for i, fd in enumerate(funcs):
        try:
            RationalFunction.from_dict(fd)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(exc), f"/functions/{i}") from exc
        fd.setdefault("id", f"f{i}")
    tol = doc.get("tolerances", {})
    outputs = {"csv_path": None, "json_path": None, "svg_path": None}
    outputs.update(doc.get("outputs", {}))
    return CampaignConfig(
        domains=doc["domains"],
        ensembles=ens,
        functions=funcs,
        quad_tol=float(tol.get("quad", 1e-8)),
        bound_slack_factor=float(tol.get("bound_slack_factor", 10.0)),
        ratio_slack=float(tol.get("ratio_slack", 1e-6)),
        n_angles=int(doc.get("n_angles", 256)),
        lemma1_samples=int(doc.get("lemma1_samples", 32)),
        damping_eps=float(doc.get("damping_eps", 0.1)),
        seed=seed,
        outputs=outputs,
    )


def serialize_config(config: CampaignConfig) -> str:
    return json.dumps(config.to_dict(), indent=2)
