"""Experiment configuration: JSON files with a published, strict schema.

Unknown keys are hard errors (``additionalProperties: false`` throughout), so
misspelled experiment definitions fail fast with a pointer to the offending
key.  See README for the schema documentation and examples under configs/.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .mimic import ROUTES, TimeGrid, exp_martingale_transform, hermite_transform, hermite_value
from .reference import ReferenceProcess, reference_from_config
from .subordinator import FAMILIES, SubordinatorSpec


class ConfigError(ValueError):
    """Invalid experiment configuration (schema violation or bad values)."""


_NUMBER = {"type": "number"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["reference", "subordinator", "grid", "n_paths", "seed"],
    "properties": {
        "reference": {
            "type": "object",
            "additionalProperties": False,
            "required": ["variant"],
            "properties": {
                "variant": {"enum": ["gaussian", "squared-bessel", "stable", "sign-flip"]},
                "k": _NUMBER,
                "delta": _NUMBER,
                "alpha": _NUMBER,
                "skew": _NUMBER,
                "scale": _NUMBER,
                "A": _NUMBER,
                "B": _NUMBER,
                "kappa": _NUMBER,
                "V": {"enum": ["rademacher", "normal"]},
            },
        },
        "subordinator": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": list(FAMILIES)},
                "beta": _NUMBER,
                "params": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "rate": _NUMBER,
                        "theta": _NUMBER,
                        "c": _NUMBER,
                        "alpha": _NUMBER,
                    },
                },
                "calibrated_kappa": _NUMBER,
                "calibration_factor": _NUMBER,
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["t_min", "t_max", "points"],
            "properties": {
                "t_min": _NUMBER,
                "t_max": _NUMBER,
                "points": {"type": "integer", "minimum": 2},
                "spacing": {"enum": ["geometric", "linear"]},
                "log_anchor": _NUMBER,
            },
        },
        "n_paths": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "route": {"enum": list(ROUTES)},
        "transform": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["hermite", "exp-martingale"]},
                "n": {"type": "integer", "minimum": 1},
            },
        },
        "tests": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name"],
                "properties": {
                    "name": {"enum": ["marginal", "martingale", "selfsim"]},
                    "times": {"type": "array", "items": _NUMBER, "minItems": 1},
                    "alpha": _NUMBER,
                    "s": _NUMBER,
                    "t": _NUMBER,
                    "c": _NUMBER,
                    "trim": _NUMBER,
                },
            },
        },
        "generator_probes": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["f", "t", "x"],
                "properties": {
                    "f": {"type": "array", "items": _NUMBER, "minItems": 1},
                    "t": _NUMBER,
                    "x": _NUMBER,
                    "h": _NUMBER,
                    "n": {"type": "integer", "minimum": 100},
                },
            },
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "directory": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": ["csv", "json", "svg"]}},
            },
        },
    },
}


@dataclass
class Experiment:
    """A parsed experiment configuration."""

    reference: ReferenceProcess
    spec: SubordinatorSpec
    grid: TimeGrid
    n_paths: int
    seed: int
    route: str = "timechange"
    transform: dict | None = None
    tests: list = field(default_factory=list)
    generator_probes: list = field(default_factory=list)
    out_dir: str = "out"
    formats: tuple = ("csv", "json")

    def apply_transform(self, ensemble):
        if self.transform is None:
            return ensemble
        if self.transform["type"] == "hermite":
            return hermite_transform(ensemble, self.transform["n"])
        return exp_martingale_transform(ensemble)

    def marginal_transform(self):
        """Entrywise map applied to fresh reference draws, or None."""
        if self.transform is None:
            return None
        if self.transform["type"] == "hermite":
            n = self.transform["n"]
            return lambda values, t: hermite_value(values, t, n)
        return lambda values, t: np.exp(np.asarray(values) - 0.5 * t)


def parse_config(raw: dict) -> Experiment:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as err:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"at {path}: {err.message}") from err

    try:
        reference = reference_from_config(raw["reference"])
        spec = SubordinatorSpec.from_config(raw["subordinator"])
    except (KeyError, ValueError) as err:
        raise ConfigError(str(err)) from err

    g = raw["grid"]
    if not g["t_max"] > g["t_min"] > 0.0:
        raise ConfigError("grid requires 0 < t_min < t_max")
    builder = TimeGrid.geometric if g.get("spacing", "geometric") == "geometric" else TimeGrid.linear
    grid = builder(g["t_min"], g["t_max"], g["points"], g.get("log_anchor"))

    transform = raw.get("transform")
    if transform is not None and transform["type"] == "hermite" and "n" not in transform:
        raise ConfigError("hermite transform requires 'n'")

    outputs = raw.get("outputs", {})
    return Experiment(
        reference=reference,
        spec=spec,
        grid=grid,
        n_paths=raw["n_paths"],
        seed=raw["seed"],
        route=raw.get("route", "timechange"),
        transform=transform,
        tests=raw.get("tests", []),
        generator_probes=raw.get("generator_probes", []),
        out_dir=outputs.get("directory", "out"),
        formats=tuple(outputs.get("formats", ["csv", "json"])),
    )


def load_config(path: str) -> Experiment:
    """Read and validate a config file; diagnostics carry line numbers."""
    with open(path) as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from err
    try:
        return parse_config(raw)
    except ConfigError as err:
        raise ConfigError(f"{path}: {err}") from err
