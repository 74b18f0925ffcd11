"""Experiment configuration: JSON schema, validation, and loading."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .blasso import SfwOptions
from .measures import Box
from .refine import RefineOptions
from .scatter import ScattererConfig

SCHEMA_VERSION = 1

_NUMBER = {"type": "number"}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_NONNEGATIVE = {"type": "number", "minimum": 0}
_COUNT = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "d", "kappa", "domain_side"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "d": {"enum": [2, 3]},
        "kappa": _POSITIVE,
        "m": _COUNT,
        "seed": {"type": "integer", "minimum": 0},
        "domain_side": _POSITIVE,
        "noise_std": _NONNEGATIVE,
        "noise_seed": {"type": "integer", "minimum": 0},
        "lambda_b": _POSITIVE,
        "lambda_f": _POSITIVE,
        "match_radius": _POSITIVE,
        "truth": {
            "type": "object",
            "additionalProperties": False,
            "required": ["amplitudes", "locations"],
            "properties": {
                "amplitudes": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "oneOf": [
                            _NUMBER,
                            {
                                "type": "array",
                                "minItems": 2,
                                "maxItems": 2,
                                "items": _NUMBER,
                            },
                        ]
                    },
                },
                "locations": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "minItems": 2, "maxItems": 3, "items": _NUMBER},
                },
            },
        },
        "sfw": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon": _POSITIVE,
                "grid_points_per_axis": _COUNT,
                "max_outer_iters": _COUNT,
                "lasso_tol": _POSITIVE,
                "lasso_max_iters": _COUNT,
                "slide_tol": _POSITIVE,
                "slide_max_iters": _COUNT,
                "prune_threshold": _NONNEGATIVE,
                "merge_radius": _NONNEGATIVE,
            },
        },
        "refine": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grad_tol": _POSITIVE,
                "max_iters": _COUNT,
                "amplitude_floor": _NONNEGATIVE,
            },
        },
        "bounds_sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kappas", "deltas"],
            "properties": {
                "kappas": {"type": "array", "minItems": 1, "items": _POSITIVE},
                "deltas": {
                    "oneOf": [
                        {"type": "array", "minItems": 1, "items": _POSITIVE},
                        {
                            "type": "object",
                            "additionalProperties": {
                                "type": "array",
                                "minItems": 1,
                                "items": _POSITIVE,
                            },
                        },
                    ]
                },
                "trials": _COUNT,
                "n_dirs": _COUNT,
            },
        },
        "kernel_check": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "s_max": {"type": "number", "minimum": 10},
                "n_near": _COUNT,
                "n_far": _COUNT,
            },
        },
        "grid_init": {
            "type": "object",
            "additionalProperties": False,
            "required": ["grid_side"],
            "properties": {"grid_side": {"type": "integer", "minimum": 2}},
        },
    },
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """Validated experiment configuration with resolved defaults."""

    raw: dict
    path: str | None = None

    def __post_init__(self):
        try:
            jsonschema.validate(self.raw, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at '{where}': {exc.message}") from exc
        truth = self.raw.get("truth")
        if truth is not None and len(truth["amplitudes"]) != len(truth["locations"]):
            raise ConfigError("config invalid at 'truth': amplitude and location counts differ")
        if truth is not None:
            for i, loc in enumerate(truth["locations"]):
                if len(loc) != self.d:
                    raise ConfigError(
                        f"config invalid at 'truth/locations/{i}': expected {self.d} coordinates"
                    )

    @property
    def d(self) -> int:
        return int(self.raw["d"])

    @property
    def kappa(self) -> float:
        return float(self.raw["kappa"])

    @property
    def m(self) -> int:
        return int(self.raw.get("m", 1))

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def noise_std(self) -> float:
        return float(self.raw.get("noise_std", 0.0))

    @property
    def noise_seed(self) -> int:
        return int(self.raw.get("noise_seed", self.seed + 1000))

    @property
    def domain(self) -> Box:
        return Box(d=self.d, side=float(self.raw["domain_side"]))

    def truth_config(self) -> ScattererConfig | None:
        truth = self.raw.get("truth")
        if truth is None:
            return None
        amps = np.array(
            [complex(a[0], a[1]) if isinstance(a, list) else complex(a) for a in truth["amplitudes"]]
        )
        locs = np.array(truth["locations"], dtype=float)
        return ScattererConfig(d=self.d, amplitudes=amps, locations=locs, domain=self.domain)

    def sfw_options(self) -> SfwOptions:
        if "lambda_b" not in self.raw:
            raise ConfigError("config invalid at 'lambda_b': required for recovery commands")
        return SfwOptions(lambda_b=float(self.raw["lambda_b"]), **self.raw.get("sfw", {}))

    def refine_options(self) -> RefineOptions:
        if "lambda_f" not in self.raw:
            raise ConfigError("config invalid at 'lambda_f': required for recovery commands")
        return RefineOptions(lambda_f=float(self.raw["lambda_f"]), **self.raw.get("refine", {}))

    def with_seed(self, seed: int | None) -> "ExperimentConfig":
        if seed is None:
            return self
        raw = dict(self.raw)
        raw["seed"] = int(seed)
        return ExperimentConfig(raw=raw, path=self.path)

    def resolved(self) -> dict:
        out = dict(self.raw)
        out.setdefault("seed", self.seed)
        out.setdefault("noise_std", self.noise_std)
        out.setdefault("noise_seed", self.noise_seed)
        return out


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON (line {exc.lineno}, col {exc.colno}): {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return ExperimentConfig(raw=raw, path=str(path))
