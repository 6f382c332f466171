"""End-to-end simulate / reconstruct driven by an ExperimentConfig."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .imaging import ReducedTable, reduced_table
from .recon import (
    IndicatorField,
    ReconstructionReport,
    build_report,
    evaluate_field,
    extract_peaks,
    peak_to_sidelobe_ratio,
    read_tensors,
    refine_peaks,
)
from .synth_data import CauchyDataset, add_noise, generate_cauchy_data


def simulate(cfg: ExperimentConfig) -> CauchyDataset:
    ds = generate_cauchy_data(cfg.source_config(), cfg.lame(), cfg.measurement_geometry(), cfg.frequency_ladder())
    spec = cfg.noise_spec()
    return ds if spec is None else add_noise(ds, spec)


@dataclass
class Reconstruction:
    table: ReducedTable
    field: IndicatorField
    peaks: list
    report: ReconstructionReport


def reconstruct(dataset: CauchyDataset, cfg: ExperimentConfig, with_truth: bool = True,
                threads: int = 1) -> Reconstruction:
    """Tabulate R, sample the grid, pick and refine peaks, read tensors, report."""
    idx = cfg.omega_indices()
    table = reduced_table(dataset, cfg.direction_quadrature(), idx)
    grid = cfg.sampling_grid()
    field = evaluate_field(table, None, grid, threads=threads)
    sep = cfg.min_separation()
    peaks = extract_peaks(field, cfg.peaks["threshold"], sep)
    peaks = refine_peaks(table, None, peaks, cfg.refinement["levels"], cfg.refinement["nodes_per_axis"],
                         omega_star=cfg.ladder["omega_star"], domain=grid)
    peaks = read_tensors(peaks)
    truth = cfg.source_config() if with_truth else None
    radius = 1.0 / cfg.ladder["omega_star"]
    centers = truth.locations if truth is not None else np.array([p.location for p in peaks])
    psr = peak_to_sidelobe_ratio(field, centers, radius) if len(centers) else None
    report = build_report(peaks, truth, match_radius=radius, peak_to_sidelobe=psr)
    return Reconstruction(table, field, peaks, report)


def field_to_csv(field: IndicatorField) -> str:
    d = field.grid.dim
    coords = ["x", "y", "z"][:d]
    cols = [f"m{i + 1}{j + 1}_{part}" for i in range(d) for j in range(d) for part in ("re", "im")]
    lines = [",".join(coords + cols + ["score"])]
    m = field.matrices.reshape(len(field.matrices), -1)
    inter = np.stack([m.real, m.imag], axis=-1).reshape(len(m), -1)
    rows = np.concatenate([field.grid.points, inter, field.scores[:, None]], axis=1)
    lines += [",".join(repr(float(v)) for v in row) for row in rows]
    return "\n".join(lines) + "\n"
