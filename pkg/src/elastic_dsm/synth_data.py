"""Measurement geometry, frequency ladders, synthetic Cauchy data, noise and
dataset files."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import jsonschema
import numpy as np

from .elastic_model import LameParameters, SourceConfiguration, radiated_field, traction

ALPHAS = ("p", "s")
FORMAT_VERSION = 1


class DatasetFormatError(ValueError):
    """A dataset file does not match the expected schema."""


@dataclass(frozen=True, eq=False)
class MeasurementGeometry:
    dim: int
    radius: float
    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    @property
    def surface_measure(self) -> float:
        return 2 * np.pi * self.radius if self.dim == 2 else 4 * np.pi * self.radius**2


def _fibonacci_sphere(n):
    i = np.arange(n)
    z = 1.0 - (2.0 * i + 1.0) / n
    rxy = np.sqrt(1.0 - z * z)
    phi = i * np.pi * (3.0 - np.sqrt(5.0))
    return np.stack([rxy * np.cos(phi), rxy * np.sin(phi), z], axis=-1)


def build_geometry(dim: int, radius: float, node_count: int, allow_small: bool = False) -> MeasurementGeometry:
    """Nodes on the circle/sphere of ``radius`` centered at the origin.

    2D uses equispaced angles (trapezoid weights), 3D a Fibonacci spiral
    lattice with equal weights.
    """
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim!r}")
    if not radius > 0:
        raise ValueError("radius must be positive")
    if node_count < (1 if allow_small else 8):
        raise ValueError(f"need at least 8 boundary nodes, got {node_count}")
    if dim == 2:
        theta = 2 * np.pi * np.arange(node_count) / node_count
        normals = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        measure = 2 * np.pi * radius
    else:
        normals = _fibonacci_sphere(node_count)
        measure = 4 * np.pi * radius**2
    weights = np.full(node_count, measure / node_count)
    return MeasurementGeometry(dim, float(radius), radius * normals, normals, weights)


@dataclass(frozen=True, eq=False)
class FrequencyLadder:
    omega_star: float
    eta: float
    count: int
    values: np.ndarray


def frequency_ladder(omega_star: float, eta: float, count: int) -> FrequencyLadder:
    """Geometric ladder eta^(n-1) * omega_star, n = 1..count."""
    if not omega_star > 0:
        raise ValueError("omega_star must be positive")
    if not eta > 1:
        raise ValueError("eta must exceed 1")
    if count < 1:
        raise ValueError("count must be at least 1")
    values = omega_star * float(eta) ** np.arange(count)
    return FrequencyLadder(float(omega_star), float(eta), int(count), values)


@dataclass(frozen=True)
class OmegaCheck:
    passed: bool
    margin: float
    min_distance: float
    note: str = ""


def validate_omega_star(config: SourceConfiguration, omega_star: float) -> OmegaCheck:
    """Check omega_star >= 2 / (min pairwise source distance).

    The margin is omega_star * min_distance / 2 (>= 1 when admissible).  A
    single source has no pairwise distance and is always admissible.
    """
    if config.m == 1:
        return OmegaCheck(True, float("inf"), float("inf"), "single source: any omega_star > 0 admissible")
    dmin = config.min_distance
    margin = omega_star * dmin / 2
    return OmegaCheck(margin >= 1.0, margin, dmin)


@dataclass(frozen=True)
class NoiseSpec:
    level: float
    seed: int

    def __post_init__(self):
        if not 0 <= self.level < 1:
            raise ValueError(f"noise level must lie in [0, 1), got {self.level}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class CauchyDataset:
    """Boundary displacement ``u`` and traction ``t`` per (frequency, wave type).

    ``u`` and ``t`` have shape (N, 2, nodes, d); axis 1 is ordered (p, s).
    Record (n, alpha) was sampled at physical angular frequency c_alpha * omega_n.
    """

    geometry: MeasurementGeometry
    medium: LameParameters
    ladder: FrequencyLadder
    u: np.ndarray
    t: np.ndarray
    noise: NoiseSpec | None = None

    def __post_init__(self):
        shape = (self.ladder.count, 2, self.geometry.node_count, self.geometry.dim)
        if self.u.shape != shape or self.t.shape != shape:
            raise ValueError(f"record arrays must have shape {shape}, got {self.u.shape} / {self.t.shape}")

    @property
    def dim(self) -> int:
        return self.geometry.dim

    def record(self, omega_index: int, alpha: str):
        if alpha not in ALPHAS or not 0 <= omega_index < self.ladder.count:
            raise KeyError(f"no record for (omega_index={omega_index}, alpha={alpha!r})")
        a = ALPHAS.index(alpha)
        return self.u[omega_index, a], self.t[omega_index, a]


def generate_cauchy_data(config: SourceConfiguration, medium: LameParameters,
                         geometry: MeasurementGeometry, ladder: FrequencyLadder) -> CauchyDataset:
    """Noise-free (u, T_nu u) on the boundary at c_alpha * omega for each rung."""
    if config.dim != geometry.dim:
        raise ValueError("source and geometry dimensions differ")
    if np.any(np.linalg.norm(config.locations, axis=-1) >= geometry.radius):
        raise ValueError("all sources must lie strictly inside the measurement surface")
    medium.check(geometry.dim)
    shape = (ladder.count, 2, geometry.node_count, geometry.dim)
    u = np.empty(shape, dtype=complex)
    t = np.empty(shape, dtype=complex)
    for n, omega in enumerate(ladder.values):
        for a, alpha in enumerate(ALPHAS):
            val, grad = radiated_field(config, medium, medium.speed(alpha) * omega, geometry.nodes, True)
            u[n, a] = val
            t[n, a] = traction(medium, geometry.normals, val, grad)
    return CauchyDataset(geometry, medium, ladder, u, t)


def noise_generator(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator used for all dataset noise."""
    return np.random.Generator(np.random.Philox(int(seed)))


def add_noise(dataset: CauchyDataset, spec: NoiseSpec) -> CauchyDataset:
    """Relative complex noise  v + eps * r1 * |v| * exp(i pi r2),  r1, r2 ~ U[-1, 1].

    Draws are independent per component, node, field and record.  They are
    taken record by record (frequency-major, then p before s); within a record
    one block of shape (field=u|t, r1|r2, node, component).
    """
    rng = noise_generator(spec.seed)
    u = dataset.u.copy()
    t = dataset.t.copy()
    N, A, n, d = u.shape
    for i in range(N):
        for a in range(A):
            r = rng.uniform(-1.0, 1.0, size=(2, 2, n, d))
            for fld, arr in enumerate((u, t)):
                v = arr[i, a]
                arr[i, a] = v + spec.level * r[fld, 0] * np.abs(v) * np.exp(1j * np.pi * r[fld, 1])
    return replace(dataset, u=u, t=t, noise=spec)


# ---------------------------------------------------------------- file format

_NUM = {"type": "number"}
_VEC = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 3}
_CPLX = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_CVEC_LIST = {"type": "array", "items": {"type": "array", "items": _CPLX, "minItems": 2, "maxItems": 3}}

DATASET_SCHEMA = {
    "type": "object",
    "required": ["version", "dim", "medium", "geometry", "ladder", "records", "noise"],
    "properties": {
        "version": {"type": "integer"},
        "dim": {"enum": [2, 3]},
        "medium": {
            "type": "object",
            "required": ["lambda", "mu"],
            "properties": {"lambda": _NUM, "mu": _NUM},
        },
        "geometry": {
            "type": "object",
            "required": ["radius", "nodes", "normals", "weights"],
            "properties": {
                "radius": _NUM,
                "nodes": {"type": "array", "items": _VEC},
                "normals": {"type": "array", "items": _VEC},
                "weights": {"type": "array", "items": _NUM},
            },
        },
        "ladder": {
            "type": "object",
            "required": ["omega_star", "eta", "count", "values"],
            "properties": {
                "omega_star": _NUM,
                "eta": _NUM,
                "count": {"type": "integer", "minimum": 1},
                "values": {"type": "array", "items": _NUM},
            },
        },
        "records": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["omega_index", "alpha", "u", "t"],
                "properties": {
                    "omega_index": {"type": "integer", "minimum": 0},
                    "alpha": {"enum": list(ALPHAS)},
                    "u": _CVEC_LIST,
                    "t": _CVEC_LIST,
                },
            },
        },
        "noise": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["level", "seed"],
                    "properties": {"level": _NUM, "seed": {"type": "integer", "minimum": 0}},
                },
            ]
        },
    },
}


def _cplx_list(arr):
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def dataset_to_dict(ds: CauchyDataset) -> dict:
    g, lad = ds.geometry, ds.ladder
    records = []
    for n in range(lad.count):
        for a, alpha in enumerate(ALPHAS):
            records.append({"omega_index": n, "alpha": alpha, "u": _cplx_list(ds.u[n, a]), "t": _cplx_list(ds.t[n, a])})
    return {
        "version": FORMAT_VERSION,
        "dim": g.dim,
        "medium": {"lambda": ds.medium.lam, "mu": ds.medium.mu},
        "geometry": {
            "radius": g.radius,
            "nodes": g.nodes.tolist(),
            "normals": g.normals.tolist(),
            "weights": g.weights.tolist(),
        },
        "ladder": {"omega_star": lad.omega_star, "eta": lad.eta, "count": lad.count, "values": lad.values.tolist()},
        "records": records,
        "noise": None if ds.noise is None else {"level": ds.noise.level, "seed": int(ds.noise.seed)},
    }


def _path_str(path) -> str:
    return "/".join(str(p) for p in path) or "<root>"


def dataset_from_dict(doc) -> CauchyDataset:
    if isinstance(doc, dict) and "version" in doc and doc["version"] != FORMAT_VERSION:
        raise DatasetFormatError(f"version: unsupported dataset version {doc['version']!r} (expected {FORMAT_VERSION})")
    try:
        jsonschema.validate(doc, DATASET_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise DatasetFormatError(f"{_path_str(exc.absolute_path)}: {exc.message}") from None
    dim = doc["dim"]
    geo = doc["geometry"]
    nodes = np.array(geo["nodes"], dtype=float)
    normals = np.array(geo["normals"], dtype=float)
    weights = np.array(geo["weights"], dtype=float)
    n = len(weights)
    if nodes.shape != (n, dim) or normals.shape != (n, dim):
        raise DatasetFormatError(f"geometry: nodes/normals must have shape ({n}, {dim})")
    geometry = MeasurementGeometry(dim, float(geo["radius"]), nodes, normals, weights)
    lad = doc["ladder"]
    values = np.array(lad["values"], dtype=float)
    if values.shape != (lad["count"],):
        raise DatasetFormatError("ladder/values: length must equal ladder/count")
    ladder = FrequencyLadder(float(lad["omega_star"]), float(lad["eta"]), int(lad["count"]), values)
    try:
        medium = LameParameters(float(doc["medium"]["lambda"]), float(doc["medium"]["mu"]))
    except ValueError as exc:
        raise DatasetFormatError(f"medium: {exc}") from None
    shape = (ladder.count, 2, n, dim)
    u = np.full(shape, np.nan, dtype=complex)
    t = np.full(shape, np.nan, dtype=complex)
    seen = set()
    for i, rec in enumerate(doc["records"]):
        key = (rec["omega_index"], rec["alpha"])
        if key[0] >= ladder.count:
            raise DatasetFormatError(f"records/{i}/omega_index: {key[0]} out of range")
        if key in seen:
            raise DatasetFormatError(f"records/{i}: duplicate record {key}")
        seen.add(key)
        for name, arr in (("u", u), ("t", t)):
            vals = np.array(rec[name], dtype=float)
            if vals.shape != (n, dim, 2):
                raise DatasetFormatError(f"records/{i}/{name}: expected shape ({n}, {dim}, 2), got {vals.shape}")
            arr[key[0], ALPHAS.index(key[1])] = vals[..., 0] + 1j * vals[..., 1]
    missing = [(k, a) for k in range(ladder.count) for a in ALPHAS if (k, a) not in seen]
    if missing:
        raise DatasetFormatError(f"records: missing record(s) {missing}")
    noise = None if doc["noise"] is None else NoiseSpec(float(doc["noise"]["level"]), int(doc["noise"]["seed"]))
    return CauchyDataset(geometry, medium, ladder, u, t, noise)


def write_dataset(dataset: CauchyDataset, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(dataset_to_dict(dataset)), encoding="utf-8")
    return path


def read_dataset(path) -> CauchyDataset:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"<root>: not valid JSON ({exc.msg} at char {exc.pos})") from None
    return dataset_from_dict(doc)
