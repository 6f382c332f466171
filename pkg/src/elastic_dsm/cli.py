"""Command-line entry point: simulate, reconstruct, validate, render.

Exit codes: 0 ok, 1 validation failure, 2 config/schema error, 3 I/O error,
4 reconstruction found no peaks.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .synth_data import DatasetFormatError, dataset_to_dict, read_dataset, validate_omega_star

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_IO, EXIT_EMPTY = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _parse_index_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(EXIT_CONFIG, f"frequencies: expected INT or comma list, got {text!r}") from None


def _effective_config(args) -> ExperimentConfig:
    try:
        cfg = load_config(args.config)
    except FileNotFoundError as exc:
        raise CliError(EXIT_IO, str(exc)) from None
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from None
    doc = cfg.to_dict()
    if getattr(args, "noise", None) is not None or getattr(args, "seed", None) is not None:
        base = doc.get("noise") or {"level": 0.0, "seed": 0}
        if args.noise is not None:
            base["level"] = args.noise
        if args.seed is not None:
            base["seed"] = args.seed
        doc["noise"] = base
    if getattr(args, "frequencies", None) is not None:
        doc["frequencies"] = None if args.frequencies == "all" else _parse_index_list(args.frequencies)
    if getattr(args, "grid", None) is not None:
        counts = _parse_index_list(args.grid)
        if len(counts) == 1:
            counts = counts * doc["dim"]
        doc["grid"]["counts"] = counts
    try:
        return config_from_dict(doc)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"config error: {exc}") from None


def _geometry_hash(geometry) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(geometry.nodes, dtype=float).tobytes())
    h.update(np.ascontiguousarray(geometry.weights, dtype=float).tobytes())
    return h.hexdigest()


def _write(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc}") from None


def cmd_simulate(args) -> int:
    from .pipeline import simulate

    cfg = _effective_config(args)
    if args.print_config:
        print(cfg.to_json())
        return EXIT_OK
    if not args.output:
        raise CliError(EXIT_CONFIG, "simulate needs --output")
    check = validate_omega_star(cfg.source_config(), cfg.ladder["omega_star"])
    if not check.passed:
        print(f"warning: omega_star={cfg.ladder['omega_star']} below 2/min_distance "
              f"(margin {check.margin:.3f})", file=sys.stderr)
    ds = simulate(cfg)
    doc = dataset_to_dict(ds)
    doc["provenance"] = {"config": cfg.to_dict()}
    _write(Path(args.output), json.dumps(doc))
    noise = "none" if ds.noise is None else f"{ds.noise.level:g}"
    seed = "-" if ds.noise is None else str(ds.noise.seed)
    print(f"nodes={ds.geometry.node_count} frequencies={ds.ladder.count} records={2 * ds.ladder.count} "
          f"noise={noise} seed={seed} -> {args.output}")
    return EXIT_OK


def _check_consistent(ds, cfg):
    if ds.dim != cfg.dim:
        raise CliError(EXIT_CONFIG, f"schema mismatch: dataset dim {ds.dim} vs config dim {cfg.dim}")
    if _geometry_hash(ds.geometry) != _geometry_hash(cfg.measurement_geometry()):
        raise CliError(EXIT_CONFIG, "schema mismatch: dataset geometry differs from config geometry")
    if ds.ladder.count != cfg.ladder["count"] or not np.allclose(ds.ladder.values, cfg.frequency_ladder().values):
        raise CliError(EXIT_CONFIG, "schema mismatch: dataset frequency ladder differs from config ladder")


def cmd_reconstruct(args) -> int:
    from .pipeline import field_to_csv, reconstruct

    cfg = _effective_config(args)
    if args.print_config:
        print(cfg.to_json())
        return EXIT_OK
    if not args.dataset or not args.output:
        raise CliError(EXIT_CONFIG, "reconstruct needs --dataset and --output")
    try:
        ds = read_dataset(args.dataset)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read dataset: {exc}") from None
    except DatasetFormatError as exc:
        raise CliError(EXIT_CONFIG, f"dataset schema error: {exc}") from None
    _check_consistent(ds, cfg)
    rec = reconstruct(ds, cfg, with_truth=not args.no_truth, threads=args.threads)
    out = Path(args.output)
    doc = rec.report.to_dict()
    doc["config"] = cfg.to_dict()
    doc["omegas"] = rec.table.omegas.tolist()
    _write(out / "report.json", json.dumps(doc, indent=1))
    _write(out / "field.csv", field_to_csv(rec.field))
    _print_table(rec.report)
    if not rec.peaks:
        print("no peaks found", file=sys.stderr)
        return EXIT_EMPTY
    return EXIT_OK


def _print_table(report):
    print(f"peaks: {len(report.peaks)}  peak-to-sidelobe: {report.peak_to_sidelobe}")
    if not report.has_truth:
        for p in report.peaks:
            print("  peak", np.round(p.location, 4).tolist(), "tensor", np.round(p.tensor, 3).tolist())
        return
    print(f"{'src':>4} {'location error':>15} {'tensor rel.err':>15} {'imag norm':>10}")
    for m in report.matches:
        print(f"{m.truth_index:>4} {m.location_error:>15.4f} {m.tensor_error:>15.4f} {m.imag_norm:>10.4f}")
    print(f"unmatched truth: {report.unmatched_truth}  unmatched peaks: {report.unmatched_peaks}")


def cmd_validate(args) -> int:
    from .checks import run_checks

    failed = []
    for check_id, residual, tol in run_checks(args.level):
        ok = residual <= tol
        print(f"{'PASS' if ok else 'FAIL'} {check_id:<24} residual={residual:.3e} tol={tol:.1e}")
        if not ok:
            failed.append(check_id)
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def read_field_csv(path):
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read field: {exc}") from None
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"malformed field file: {exc}") from None
    d = sum(1 for h in header if h in ("x", "y", "z"))
    if d not in (2, 3) or header[-1] != "score" or data.shape[1] != len(header) or len(header) != d + 2 * d * d + 1:
        raise CliError(EXIT_CONFIG, "malformed field file: unexpected columns")
    return header, data, d


def _grid_shape(coords):
    axes = [np.unique(coords[:, a]) for a in range(coords.shape[1])]
    shape = tuple(len(a) for a in axes)
    if int(np.prod(shape)) != len(coords):
        raise CliError(EXIT_CONFIG, "malformed field file: nodes do not form a tensor grid")
    return axes, shape


def _slice(header, data, d, axis, value):
    axes, shape = _grid_shape(data[:, :d])
    a = "xyz".index(axis)
    if a >= d:
        raise CliError(EXIT_CONFIG, f"slice axis {axis} not present in a {d}D field")
    k = int(np.argmin(np.abs(axes[a] - value)))
    cube = data.reshape(shape + (data.shape[1],))
    plane = np.take(cube, k, axis=a)
    keep = [i for i in range(d) if i != a]
    return plane.reshape(-1, data.shape[1]), keep, axes[a][k]


def pgm_bytes(scores: np.ndarray) -> bytes:
    """16-bit binary PGM; rows run from the largest second coordinate down."""
    img = np.asarray(scores, dtype=float).T[::-1]
    lo, hi = img.min(), img.max()
    if hi > lo:
        level = np.round((img - lo) / (hi - lo) * 65535)
    else:
        level = np.full(img.shape, 32768.0)
    h, w = img.shape
    return f"P5\n{w} {h}\n65535\n".encode() + level.astype(">u2").tobytes()


def cmd_render(args) -> int:
    header, data, d = read_field_csv(args.field)
    if not args.output:
        raise CliError(EXIT_CONFIG, "render needs --output")
    keep = list(range(d))
    if d == 3:
        if args.slice_value is None:
            raise CliError(EXIT_CONFIG, "3D fields need --slice-value (and optionally --slice-axis)")
        data, keep, at = _slice(header, data, d, args.slice_axis, args.slice_value)
    if args.mode == "csv-slice":
        if d != 3:
            raise CliError(EXIT_CONFIG, "csv-slice needs a 3D field")
        lines = [",".join(header)] + [",".join(repr(float(v)) for v in row) for row in data]
        _write(Path(args.output), "\n".join(lines) + "\n")
        print(f"slice {args.slice_axis}={at:g}: {len(data)} rows -> {args.output}")
        return EXIT_OK
    _, shape = _grid_shape(data[:, keep])
    scores = data[:, -1].reshape(shape)
    try:
        Path(args.output).write_bytes(pgm_bytes(scores))
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {args.output}: {exc}") from None
    print(f"{shape[0]}x{shape[1]} PGM -> {args.output}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="elastic-dsm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="config file or bundled name (table1_2d, table2_3d)")
        sp.add_argument("--output")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--noise", type=float)
        sp.add_argument("--frequencies", help="1-based ladder rung(s): INT or comma list, or 'all'")
        sp.add_argument("--grid", help="grid nodes per axis: INT or comma list")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--print-config", action="store_true")

    sim = sub.add_parser("simulate", help="generate a Cauchy dataset")
    common(sim)
    sim.set_defaults(func=cmd_simulate)

    rec = sub.add_parser("reconstruct", help="image sources from a dataset")
    common(rec)
    rec.add_argument("--dataset")
    rec.add_argument("--no-truth", action="store_true", help="do not compare against the config's sources")
    rec.set_defaults(func=cmd_reconstruct)

    val = sub.add_parser("validate", help="run oracle self-checks")
    val.add_argument("--level", choices=("quick", "full"), default="quick")
    val.set_defaults(func=cmd_validate)

    ren = sub.add_parser("render", help="render a field CSV")
    ren.add_argument("--field", required=True)
    ren.add_argument("--output")
    ren.add_argument("--mode", choices=("pgm", "csv-slice"), default="pgm")
    ren.add_argument("--slice-axis", choices=("x", "y", "z"), default="z")
    ren.add_argument("--slice-value", type=float)
    ren.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
