"""Sampling grids, indicator fields, peak picking, coarse-to-fine refinement,
tensor readout and error reports."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .elastic_model import SourceConfiguration
from .imaging import (
    DirectionQuadrature,
    IndicatorValue,
    ReducedTable,
    indicator_coefficients,
    reduced_table,
)
from .synth_data import CauchyDataset

DEFAULT_THRESHOLD = 0.25


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    lower: np.ndarray
    upper: np.ndarray
    counts: tuple
    allow_single: bool = False  # permit 1-node axes (point probes in tests)

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float)
        hi = np.array(self.upper, dtype=float)
        counts = tuple(int(c) for c in self.counts)
        if lo.shape != hi.shape or lo.shape != (len(counts),) or len(counts) not in (2, 3):
            raise ValueError("grid corners and counts must agree on a dimension of 2 or 3")
        if any(c < (1 if self.allow_single else 2) for c in counts):
            raise ValueError(f"grid needs at least 2 nodes per axis, got {counts}")
        if np.any(hi < lo) or np.any((hi == lo) & (np.array(counts) > 1)):
            raise ValueError("grid needs upper > lower on every sampled axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "counts", counts)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def axes(self):
        return [np.linspace(l, u, c) if c > 1 else np.array([0.5 * (l + u)])
                for l, u, c in zip(self.lower, self.upper, self.counts)]

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(u - l) / (c - 1) if c > 1 else 0.0 for l, u, c in zip(self.lower, self.upper, self.counts)])

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def points(self) -> np.ndarray:
        """Node coordinates in row-major order (first axis slowest)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def circumradius(self) -> float:
        """Largest distance from the origin to the box."""
        corner = np.maximum(np.abs(self.lower), np.abs(self.upper))
        return float(np.linalg.norm(corner))

    def contains(self, x, tol=1e-12) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    @classmethod
    def cube(cls, center, side, count, clip: "SamplingGrid | None" = None):
        c = np.asarray(center, dtype=float)
        lo, hi = c - side / 2, c + side / 2
        if clip is not None:
            lo = np.clip(lo, clip.lower, clip.upper)
            hi = np.clip(hi, clip.lower, clip.upper)
        return cls(lo, hi, (count,) * len(c))


@dataclass(frozen=True, eq=False)
class IndicatorField:
    grid: SamplingGrid
    matrices: np.ndarray  # (nodes, d, d) complex, row-major node order
    omega_star: float = 0.0

    def __post_init__(self):
        if self.matrices.shape[0] != self.grid.size:
            raise ValueError("one indicator matrix per grid node required")

    @property
    def scores(self) -> np.ndarray:
        return np.sum(np.abs(self.matrices) ** 2, axis=(1, 2))

    def value(self, node: int) -> IndicatorValue:
        return IndicatorValue(self.matrices[node])


@dataclass(frozen=True)
class Peak:
    location: np.ndarray
    matrix: np.ndarray
    score: float
    refinement_level: int = 0
    tensor: np.ndarray | None = None
    imag_norm: float | None = None


# ---------------------------------------------------------------- field evaluation

def _table(data, quad, omega_indices):
    if isinstance(data, ReducedTable):
        return data, omega_indices
    if quad is None:
        raise ValueError("a direction quadrature is required to tabulate R from a dataset")
    return reduced_table(data, quad, omega_indices), None


def _grid_sum_2d(omega, C, dirs, axes):
    x, y = axes
    d2 = C.shape[1] * C.shape[2]
    px = np.exp(1j * omega * np.outer(x, dirs[:, 0]))  # (na, Q)
    qy = np.exp(1j * omega * np.outer(dirs[:, 1], y))  # (Q, nb)
    tmp = C.reshape(len(dirs), d2).T[:, :, None] * qy[None]
    return np.matmul(px, tmp)  # (d2, na, nb)


def _grid_sum_3d(omega, C, quad, axes):
    x, y, z = axes
    ni, nk = quad.polar_count, quad.azimuth_count
    dirs = quad.directions.reshape(ni, nk, 3)
    Cr = C.reshape(ni, nk, 9)
    G = np.empty((9, len(x), len(y), ni), dtype=complex)
    for i in range(ni):
        px = np.exp(1j * omega * np.outer(x, dirs[i, :, 0]))
        qy = np.exp(1j * omega * np.outer(dirs[i, :, 1], y))
        G[..., i] = np.matmul(px, Cr[i].T[:, :, None] * qy[None])
    ez = np.exp(1j * omega * np.outer(dirs[:, 0, 2], z))  # (ni, nc)
    return G @ ez  # (9, na, nb, nc)


def _field_sum(table, omega_indices, grid, threads=1):
    d = grid.dim
    axes = grid.axes
    q = table.quad

    def one(item):
        omega, C = item
        if d == 2:
            return _grid_sum_2d(omega, C, q.directions, axes)
        if q.polar_count:
            return _grid_sum_3d(omega, C, q, axes)
        # unstructured direction set: plain phase matrix, chunked over nodes
        pts = grid.points
        flat = C.reshape(len(C), -1)
        out = np.empty((len(pts), flat.shape[1]), dtype=complex)
        for s in range(0, len(pts), 4096):
            out[s:s + 4096] = np.exp(1j * omega * (pts[s:s + 4096] @ q.directions.T)) @ flat
        return np.moveaxis(out.reshape(*grid.counts, d * d), -1, 0)

    items = indicator_coefficients(table, omega_indices)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(one, items))
    else:
        parts = [one(it) for it in items]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return np.moveaxis(total.reshape(d * d, -1), 0, -1).reshape(-1, d, d)


def evaluate_field(data, quad: DirectionQuadrature | None, grid: SamplingGrid, omega_indices=None,
                   threads: int = 1) -> IndicatorField:
    """Indicator at every grid node from one shared R table.

    Exploits exp(i omega xhat.z) = prod_axis exp(i omega xhat_a z_a) on the
    tensor grid, so each rung costs a few dense matrix products.
    """
    table, idx = _table(data, quad, omega_indices)
    if table.dim != grid.dim:
        raise ValueError("grid and data dimensions differ")
    mats = _field_sum(table, idx, grid, threads)
    return IndicatorField(grid, mats, table.omega_star)


# ---------------------------------------------------------------- peaks

def _local_maxima(scores):
    d = scores.ndim
    footprint = np.ones((3,) * d, dtype=bool)
    footprint[(1,) * d] = False
    neigh = ndimage.maximum_filter(scores, footprint=footprint, mode="constant", cval=-np.inf)
    return scores > neigh


def extract_peaks(field: IndicatorField, threshold_fraction: float = DEFAULT_THRESHOLD,
                  min_separation: float | None = None):
    """Strict grid-local maxima above ``threshold_fraction`` of the global max,
    thinned strongest-first so survivors are ``min_separation`` apart
    (default 1 / omega_star)."""
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must lie in (0, 1)")
    if min_separation is None:
        min_separation = 1.0 / field.omega_star if field.omega_star else 0.0
    scores = field.scores
    top = scores.max()
    if not top > 0:
        return []
    grid_scores = scores.reshape(field.grid.counts)
    cand = np.flatnonzero(_local_maxima(grid_scores).ravel() & (scores >= threshold_fraction * top))
    cand = cand[np.argsort(-scores[cand], kind="stable")]
    pts = field.grid.points
    kept = []
    for c in cand:
        if all(np.linalg.norm(pts[c] - pts[k]) >= min_separation for k in kept):
            kept.append(c)
    return [Peak(pts[k], field.matrices[k], float(scores[k])) for k in kept]


def refine_peaks(data, quad, peaks, levels: int, fine_nodes_per_axis: int = 50,
                 omega_star: float | None = None, domain: SamplingGrid | None = None, omega_indices=None):
    """Coarse-to-fine: re-sample a box of side 2/omega_star around each peak
    (shrunk 4x per further level) and move the peak to the local argmax."""
    if levels <= 0 or not peaks:
        return list(peaks)
    table, idx = _table(data, quad, omega_indices)
    omega_star = omega_star or table.omega_star
    out = []
    for pk in peaks:
        cur = pk
        side = 2.0 / omega_star
        for level in range(1, levels + 1):
            box = SamplingGrid.cube(cur.location, side, fine_nodes_per_axis, clip=domain)
            fld = evaluate_field(table, None, box, idx)
            k = int(np.argmax(fld.scores))
            cur = Peak(box.points[k], fld.matrices[k], float(fld.scores[k]), pk.refinement_level + level)
            side /= 4.0
        out.append(cur)
    return out


def read_tensors(peaks):
    """Tensor estimate = real part of the indicator; imaginary Frobenius norm kept as diagnostic."""
    return [replace(p, tensor=p.matrix.real.copy(), imag_norm=float(np.linalg.norm(p.matrix.imag))) for p in peaks]


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class SourceMatch:
    truth_index: int
    peak_index: int
    location_error: float
    tensor_error: float
    imag_norm: float


@dataclass
class ReconstructionReport:
    peaks: list
    matches: list = field(default_factory=list)
    unmatched_truth: int = 0
    unmatched_peaks: int = 0
    has_truth: bool = False
    peak_to_sidelobe: float | None = None

    @property
    def max_location_error(self) -> float:
        return max((m.location_error for m in self.matches), default=0.0)

    @property
    def max_tensor_error(self) -> float:
        return max((m.tensor_error for m in self.matches), default=0.0)

    def to_dict(self) -> dict:
        return {
            "peaks": [
                {
                    "location": p.location.tolist(),
                    "score": p.score,
                    "refinement_level": p.refinement_level,
                    "matrix": np.stack([p.matrix.real, p.matrix.imag], -1).tolist(),
                    "tensor": None if p.tensor is None else p.tensor.tolist(),
                    "imag_norm": p.imag_norm,
                }
                for p in self.peaks
            ],
            "has_truth": self.has_truth,
            "matches": [m.__dict__ for m in self.matches],
            "unmatched_truth": self.unmatched_truth,
            "unmatched_peaks": self.unmatched_peaks,
            "max_location_error": self.max_location_error,
            "max_tensor_error": self.max_tensor_error,
            "peak_to_sidelobe": _finite_or_none(self.peak_to_sidelobe),
        }


def _finite_or_none(x):
    return float(x) if x is not None and np.isfinite(x) else None


def build_report(peaks, truth: SourceConfiguration | None = None, match_radius: float | None = None,
                 peak_to_sidelobe: float | None = None) -> ReconstructionReport:
    """Greedy nearest-pair matching of peaks to truth within ``match_radius``."""
    peaks = [p if p.tensor is not None else read_tensors([p])[0] for p in peaks]
    report = ReconstructionReport(list(peaks), peak_to_sidelobe=peak_to_sidelobe)
    if truth is None:
        return report
    report.has_truth = True
    cap = np.inf if match_radius is None else match_radius
    pairs = []
    for j, src in enumerate(truth.sources):
        for k, p in enumerate(peaks):
            dist = float(np.linalg.norm(p.location - src.location))
            if dist <= cap:
                pairs.append((dist, j, k))
    pairs.sort()
    used_t, used_p = set(), set()
    for dist, j, k in pairs:
        if j in used_t or k in used_p:
            continue
        used_t.add(j)
        used_p.add(k)
        M = truth.sources[j].tensor
        err = float(np.linalg.norm(peaks[k].tensor - M) / np.linalg.norm(M))
        report.matches.append(SourceMatch(j, k, dist, err, float(peaks[k].imag_norm)))
    report.matches.sort(key=lambda m: m.truth_index)
    report.unmatched_truth = truth.m - len(used_t)
    report.unmatched_peaks = len(peaks) - len(used_p)
    return report


def peak_to_sidelobe_ratio(field: IndicatorField, centers, radius: float) -> float:
    """Weakest on-center score over the strongest score outside every ball.

    The on-center score of a center is the field maximum inside its ball.
    """
    pts = field.grid.points
    scores = field.scores
    centers = np.atleast_2d(centers)
    dist = np.linalg.norm(pts[:, None, :] - centers[None], axis=-1)
    inside = dist < radius
    on = min(scores[inside[:, j]].max() if inside[:, j].any() else 0.0 for j in range(len(centers)))
    off_mask = ~inside.any(axis=1)
    off = scores[off_mask].max() if off_mask.any() else 0.0
    if off > 0:
        return float(on / off)
    return float("inf") if on > 0 else float("nan")
