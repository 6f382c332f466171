"""Experiment configuration files (JSON) and their validation."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .elastic_model import LameParameters, SourceConfiguration
from .imaging import default_direction_resolution, direction_quadrature
from .recon import DEFAULT_THRESHOLD, SamplingGrid
from .synth_data import NoiseSpec, build_geometry, frequency_ladder


class ConfigError(ValueError):
    """Invalid experiment configuration; message starts with the key path."""


_NUM = {"type": "number"}
_NUMS = {"type": "array", "items": _NUM}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["dim", "medium", "sources", "geometry", "ladder", "grid"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "dim": {"enum": [2, 3]},
        "medium": {"type": "object", "required": ["lambda", "mu"], "additionalProperties": False,
                   "properties": {"lambda": _NUM, "mu": _NUM}},
        "sources": {"type": "array", "minItems": 1, "items": {
            "type": "object", "required": ["location", "tensor"], "additionalProperties": False,
            "properties": {"location": _NUMS, "tensor": {"type": "array", "items": _NUMS}}}},
        "geometry": {"type": "object", "required": ["radius", "nodes"], "additionalProperties": False,
                     "properties": {"radius": _NUM, "nodes": {"type": "integer"}}},
        "ladder": {"type": "object", "required": ["omega_star", "eta", "count"], "additionalProperties": False,
                   "properties": {"omega_star": _NUM, "eta": _NUM, "count": {"type": "integer"}}},
        "noise": {"oneOf": [{"type": "null"}, {
            "type": "object", "required": ["level", "seed"], "additionalProperties": False,
            "properties": {"level": _NUM, "seed": {"type": "integer", "minimum": 0}}}]},
        "grid": {"type": "object", "required": ["lower", "upper", "counts"], "additionalProperties": False,
                 "properties": {"lower": _NUMS, "upper": _NUMS, "counts": {"type": "array", "items": {"type": "integer"}}}},
        "directions": {"type": "object", "additionalProperties": False,
                       "properties": {"resolution": {"type": ["integer", "null"]}}},
        "frequencies": {"type": ["array", "null"], "items": {"type": "integer", "minimum": 1}},
        "peaks": {"type": "object", "additionalProperties": False,
                  "properties": {"threshold": _NUM, "min_separation": {"type": ["number", "null"]}}},
        "refinement": {"type": "object", "additionalProperties": False,
                       "properties": {"levels": {"type": "integer", "minimum": 0},
                                      "nodes_per_axis": {"type": "integer", "minimum": 2}}},
    },
}


@dataclass
class ExperimentConfig:
    dim: int
    medium: dict
    sources: list
    geometry: dict
    ladder: dict
    grid: dict
    noise: dict | None = None
    directions: dict = field(default_factory=lambda: {"resolution": None})
    frequencies: list | None = None  # 1-based ladder rungs; None = all
    peaks: dict = field(default_factory=lambda: {"threshold": DEFAULT_THRESHOLD, "min_separation": None})
    refinement: dict = field(default_factory=lambda: {"levels": 0, "nodes_per_axis": 50})
    name: str = ""

    # ---- derived objects

    def lame(self) -> LameParameters:
        return LameParameters(self.medium["lambda"], self.medium["mu"]).check(self.dim)

    def source_config(self) -> SourceConfiguration:
        return SourceConfiguration.from_arrays([s["location"] for s in self.sources],
                                               [s["tensor"] for s in self.sources])

    def measurement_geometry(self):
        return build_geometry(self.dim, self.geometry["radius"], self.geometry["nodes"])

    def frequency_ladder(self):
        return frequency_ladder(self.ladder["omega_star"], self.ladder["eta"], self.ladder["count"])

    def noise_spec(self) -> NoiseSpec | None:
        if self.noise is None or self.noise["level"] == 0:
            return None
        return NoiseSpec(self.noise["level"], self.noise["seed"])

    def sampling_grid(self) -> SamplingGrid:
        return SamplingGrid(self.grid["lower"], self.grid["upper"], self.grid["counts"])

    def omega_indices(self):
        """0-based ladder indices selected for imaging (None = whole ladder)."""
        if self.frequencies is None:
            return None
        return [i - 1 for i in self.frequencies]

    def direction_quadrature(self):
        res = self.directions.get("resolution")
        if res is None:
            ladder = self.frequency_ladder()
            idx = self.omega_indices()
            wmax = ladder.values.max() if idx is None else ladder.values[idx].max()
            res = default_direction_resolution(self.dim, wmax, self.sampling_grid().circumradius)
        return direction_quadrature(self.dim, res)

    def min_separation(self) -> float:
        sep = self.peaks.get("min_separation")
        return 1.0 / self.ladder["omega_star"] if sep is None else sep

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _check(doc):
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None


def config_from_dict(doc) -> ExperimentConfig:
    _check(doc)
    cfg = ExperimentConfig(**copy.deepcopy(doc))
    cfg.directions = {"resolution": None, **cfg.directions}
    cfg.peaks = {"threshold": DEFAULT_THRESHOLD, "min_separation": None, **cfg.peaks}
    cfg.refinement = {"levels": 0, "nodes_per_axis": 50, **cfg.refinement}
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    d = cfg.dim
    steps = [
        ("medium", cfg.lame),
        ("sources", cfg.source_config),
        ("geometry", cfg.measurement_geometry),
        ("ladder", cfg.frequency_ladder),
        ("noise", cfg.noise_spec),
        ("grid", cfg.sampling_grid),
    ]
    for key, fn in steps:
        try:
            fn()
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{key}: {exc}") from None
    src = cfg.source_config()
    if src.dim != d:
        raise ConfigError(f"sources: dimension {src.dim} does not match dim={d}")
    grid = cfg.sampling_grid()
    if grid.dim != d:
        raise ConfigError(f"grid: dimension {grid.dim} does not match dim={d}")
    for j, s in enumerate(src.sources):
        if not grid.contains(s.location):
            raise ConfigError(f"sources/{j}/location: outside the sampling box")
        if np.linalg.norm(s.location) >= cfg.geometry["radius"]:
            raise ConfigError(f"sources/{j}/location: not inside the measurement surface")
    if cfg.frequencies is not None:
        if not cfg.frequencies:
            raise ConfigError("frequencies: must select at least one rung")
        for i, n in enumerate(cfg.frequencies):
            if not 1 <= n <= cfg.ladder["count"]:
                raise ConfigError(f"frequencies/{i}: rung {n} outside 1..{cfg.ladder['count']}")
    if not 0 < cfg.peaks["threshold"] < 1:
        raise ConfigError("peaks/threshold: must lie in (0, 1)")
    if cfg.directions["resolution"] is not None and cfg.directions["resolution"] < 4:
        raise ConfigError("directions/resolution: must be >= 4")


def bundled_configs():
    return sorted(p.name[:-5] for p in resources.files("elastic_dsm.configs").iterdir() if p.name.endswith(".json"))


def load_config(name_or_path) -> ExperimentConfig:
    """Load a config file, or a bundled config by name (e.g. ``table1_2d``)."""
    p = Path(name_or_path)
    if p.exists():
        text = p.read_text(encoding="utf-8")
    elif str(name_or_path) in bundled_configs():
        text = resources.files("elastic_dsm.configs").joinpath(f"{name_or_path}.json").read_text(encoding="utf-8")
    else:
        raise FileNotFoundError(f"no config file or bundled config named {name_or_path!r}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<root>: not valid JSON ({exc.msg} at char {exc.pos})") from None
    return config_from_dict(doc)
