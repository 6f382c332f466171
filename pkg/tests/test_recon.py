import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elastic_dsm.elastic_model import LameParameters, SourceConfiguration
from elastic_dsm.imaging import (
    DirectionQuadrature,
    default_direction_resolution,
    direction_quadrature,
    exact_reduced_table,
    indicator,
    indicator_at,
    reduced_table,
)
from elastic_dsm.recon import (
    IndicatorField,
    Peak,
    SamplingGrid,
    build_report,
    evaluate_field,
    extract_peaks,
    peak_to_sidelobe_ratio,
    read_tensors,
    refine_peaks,
)
from elastic_dsm.synth_data import build_geometry, frequency_ladder, generate_cauchy_data

UNIT = LameParameters(1.0, 1.0)
TABLE1 = SourceConfiguration.from_arrays(
    [[0, 4], [-3, -3], [3, -3], [4, -2]],
    [[[4, 2], [2, 3]], [[-3, 0], [0, -4]], [[0, 3], [3, 0]], [[3, 2], [2, 0]]],
)


def exact_table(cfg, N=10, omega_star=5.0, radius=None):
    lad = frequency_ladder(omega_star, 1.2, N)
    rho = radius if radius is not None else 6 * np.sqrt(cfg.dim)
    quad = direction_quadrature(cfg.dim, default_direction_resolution(cfg.dim, lad.values[-1], rho))
    return exact_reduced_table(cfg, lad.values, quad)


def point_field(scores_2d, omega_star=5.0, lower=(0.0, 0.0), upper=(1.0, 1.0)):
    """Field whose (real, diagonal) matrices reproduce given scores."""
    grid = SamplingGrid(lower, upper, scores_2d.shape)
    mats = np.zeros((grid.size, 2, 2), dtype=complex)
    mats[:, 0, 0] = np.sqrt(scores_2d.ravel())
    return IndicatorField(grid, mats, omega_star)


# ---------------------------------------------------------------- grid

def test_grid_points_row_major():
    g = SamplingGrid([0, 10], [1, 12], (2, 3))
    assert g.points.tolist() == [[0, 10], [0, 11], [0, 12], [1, 10], [1, 11], [1, 12]]
    assert np.allclose(g.spacing, [1, 1])
    assert g.size == 6


def test_grid_invariants():
    with pytest.raises(ValueError):
        SamplingGrid([0, 0], [1, 1], (1, 5))
    with pytest.raises(ValueError):
        SamplingGrid([0, 0], [-1, 1], (3, 3))
    with pytest.raises(ValueError):
        SamplingGrid([0, 0, 0], [1, 1], (3, 3))
    single = SamplingGrid([2, 3], [2, 3], (1, 1), allow_single=True)
    assert single.points.tolist() == [[2, 3]]


def test_grid_cube_clipped():
    dom = SamplingGrid([-6, -6], [6, 6], (5, 5))
    box = SamplingGrid.cube([5.9, 0.0], 0.4, 9, clip=dom)
    assert box.upper[0] == 6.0 and box.lower[0] == pytest.approx(5.7)
    assert all(dom.contains(p) for p in box.points)


# ---------------------------------------------------------------- field

def test_field_point_probe_matches_indicator():
    table = exact_table(TABLE1)
    s1 = TABLE1.locations[0]
    probe = SamplingGrid(s1, s1, (1, 1), allow_single=True)
    fld = evaluate_field(table, None, probe)
    assert np.allclose(fld.matrices[0], indicator(table, None, s1).matrix, rtol=1e-13)


@pytest.mark.parametrize("dim", [2, 3])
def test_separable_grid_sum_matches_pointwise(dim):
    rng = np.random.default_rng(dim)
    cfg = SourceConfiguration.from_arrays(rng.uniform(-1, 1, (2, dim)), rng.normal(size=(2, dim, dim)))
    table = exact_table(cfg, N=3, omega_star=2.0, radius=3.0)
    grid = SamplingGrid([-1.5] * dim, [1.5] * dim, (7, 5, 4)[:dim])
    fld = evaluate_field(table, None, grid, [0, 2])
    ref = indicator_at(table, grid.points, [0, 2])
    assert np.allclose(fld.matrices, ref, rtol=0, atol=1e-12 * np.abs(ref).max())
    assert np.allclose(fld.scores, np.sum(np.abs(fld.matrices) ** 2, axis=(1, 2)), rtol=1e-15)


def test_unstructured_direction_set_matches_pointwise():
    rng = np.random.default_rng(1)
    cfg = SourceConfiguration.from_arrays([[0.2, 0.1, -0.3]], [np.diag([1.0, 2.0, -1.0])])
    prod = direction_quadrature(3, 12)
    flat = DirectionQuadrature(3, prod.directions, prod.weights)  # drop the product structure
    omegas = frequency_ladder(2.0, 1.2, 3).values
    grid = SamplingGrid([-1, -1, -1], [1, 1, 1], (3, 4, 2))
    a = evaluate_field(exact_reduced_table(cfg, omegas, flat), None, grid, [1, 2])
    b = evaluate_field(exact_reduced_table(cfg, omegas, prod), None, grid, [1, 2])
    assert np.allclose(a.matrices, b.matrices, rtol=0, atol=1e-12)


def test_threads_do_not_change_result():
    table = exact_table(TABLE1)
    grid = SamplingGrid([-6, -6], [6, 6], (40, 40))
    a = evaluate_field(table, None, grid, threads=1)
    b = evaluate_field(table, None, grid, threads=3)
    assert np.array_equal(a.matrices, b.matrices)


def test_field_from_dataset_requires_quadrature():
    ds = generate_cauchy_data(TABLE1, UNIT, build_geometry(2, 10.0, 32), frequency_ladder(5.0, 1.2, 1))
    with pytest.raises(ValueError):
        evaluate_field(ds, None, SamplingGrid([-1, -1], [1, 1], (3, 3)))


def test_zero_dataset_gives_zero_field_and_no_peaks():
    zero = SourceConfiguration.from_arrays([[0.0, 0.0]], [np.zeros((2, 2))], allow_zero=True)
    ds = generate_cauchy_data(zero, UNIT, build_geometry(2, 10.0, 64), frequency_ladder(5.0, 1.2, 2))
    fld = evaluate_field(ds, direction_quadrature(2, 64), SamplingGrid([-2, -2], [2, 2], (20, 20)))
    assert not np.any(fld.scores)
    assert extract_peaks(fld) == []


# ---------------------------------------------------------------- peaks

def test_single_source_single_peak_at_nearest_node():
    cfg = SourceConfiguration.from_arrays([[0.83, -1.27]], [[[2, 1], [1, -1]]])
    grid = SamplingGrid([-3, -3], [3, 3], (61, 61))
    fld = evaluate_field(exact_table(cfg, radius=5.0), None, grid)
    peaks = extract_peaks(fld)
    assert len(peaks) == 1
    nearest = grid.points[np.argmin(np.linalg.norm(grid.points - cfg.locations[0], axis=1))]
    assert np.array_equal(peaks[0].location, nearest)


def test_greedy_separation_keeps_stronger():
    scores = np.zeros((41, 41))
    scores[20, 20] = 2.0
    scores[20, 22] = 1.5  # 0.05 away on a unit box with spacing 0.025
    fld = point_field(scores)
    peaks = extract_peaks(fld, 0.25, min_separation=0.2)
    assert len(peaks) == 1 and peaks[0].score == pytest.approx(2.0)
    assert len(extract_peaks(fld, 0.25, min_separation=0.01)) == 2


def test_threshold_and_strictness():
    scores = np.zeros((9, 9))
    scores[2, 2] = 1.0
    scores[6, 6] = 0.2
    scores[4, 1] = scores[4, 2] = 0.9  # plateau: not a strict maximum
    peaks = extract_peaks(point_field(scores), 0.25, min_separation=0.0)
    assert [tuple(p.location) for p in peaks] == [(0.25, 0.25)]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), frac=st.floats(0.05, 0.9), sep=st.floats(0.0, 0.5))
def test_peak_properties(seed, frac, sep):
    rng = np.random.default_rng(seed)
    scores = rng.random((15, 15)) ** 4
    fld = point_field(scores)
    peaks = extract_peaks(fld, frac, sep)
    from elastic_dsm.recon import _local_maxima

    n_max = int(np.sum(_local_maxima(scores) & (scores >= frac * scores.max())))
    assert len(peaks) <= n_max
    for i, a in enumerate(peaks):
        assert a.score > 0 and fld.grid.contains(a.location)
        for b in peaks[i + 1:]:
            assert np.linalg.norm(a.location - b.location) >= sep


def test_extract_peaks_rejects_threshold():
    with pytest.raises(ValueError):
        extract_peaks(point_field(np.ones((3, 3))), 1.0)


# ---------------------------------------------------------------- refinement

def test_refine_zero_levels_is_identity():
    peaks = [Peak(np.array([0.1, 0.2]), np.eye(2), 1.0)]
    assert refine_peaks(None, None, peaks, 0) == peaks


@pytest.mark.parametrize("dim", [2, 3])
def test_refinement_single_source(dim):
    rng = np.random.default_rng(5 + dim)
    s = rng.uniform(-2, 2, dim)
    cfg = SourceConfiguration.from_arrays([s], [rng.normal(size=(dim, dim))])
    table = exact_table(cfg, radius=5.0)
    grid = SamplingGrid([-3] * dim, [3] * dim, (31,) * dim)  # spacing 0.2 keeps s inside the 2/omega* box
    coarse = extract_peaks(evaluate_field(table, None, grid))
    assert len(coarse) == 1
    err0 = np.linalg.norm(coarse[0].location - s)
    errs = [err0]
    for levels in (1, 2):
        fine = refine_peaks(table, None, coarse, levels, 50 if dim == 2 else 20, domain=grid)
        assert fine[0].refinement_level == levels
        errs.append(np.linalg.norm(fine[0].location - s))
    n_fine = 50 if dim == 2 else 20
    assert errs[1] <= np.sqrt(dim) * (2 / 5.0) / (n_fine - 1) / 2 + 1e-12
    assert errs[1] <= err0 and errs[2] <= errs[1] + 1e-12


def test_refinement_stays_in_domain():
    cfg = SourceConfiguration.from_arrays([[5.95, 0.0]], [np.eye(2)])
    table = exact_table(cfg)
    dom = SamplingGrid([-6, -6], [6, 6], (25, 25))
    peaks = extract_peaks(evaluate_field(table, None, dom))
    fine = refine_peaks(table, None, peaks, 2, 30, domain=dom)
    assert all(dom.contains(p.location) for p in fine)


# ---------------------------------------------------------------- readout and reports

def test_read_tensors_exact_single_source():
    M = np.array([[1.0, -2.0], [0.5, 3.0]])
    cfg = SourceConfiguration.from_arrays([[1.0, 1.0]], [M])
    table = exact_table(cfg)
    val = indicator(table, None, np.array([1.0, 1.0]))
    (pk,) = read_tensors([Peak(np.array([1.0, 1.0]), val.matrix, val.score)])
    assert np.allclose(pk.tensor, M, atol=1e-12)
    assert pk.imag_norm <= 1e-12


def test_report_perfect_and_counts():
    perfect = [Peak(s.location, s.tensor.astype(complex), 1.0) for s in TABLE1.sources]
    rep = build_report(perfect, TABLE1, match_radius=0.2)
    assert rep.max_location_error == 0 and rep.max_tensor_error == 0
    assert rep.unmatched_truth == 0 and rep.unmatched_peaks == 0
    rep = build_report(perfect[:3], TABLE1, match_radius=0.2)
    assert rep.unmatched_truth == 1 and len(rep.matches) == 3
    assert len({m.peak_index for m in rep.matches}) == 3
    far = [Peak(np.array([5.0, 5.0]), np.eye(2, dtype=complex), 1.0)]
    rep = build_report(far, TABLE1, match_radius=0.2)
    assert rep.unmatched_truth == 4 and rep.unmatched_peaks == 1


def test_report_serializes():
    import json

    pk = read_tensors([Peak(np.array([0.0, 4.0]), np.array([[4, 2], [2, 3]], dtype=complex) + 0.01j, 1.0)])
    doc = build_report(pk, TABLE1, match_radius=0.2, peak_to_sidelobe=3.0).to_dict()
    back = json.loads(json.dumps(doc))
    assert back["matches"][0]["truth_index"] == 0
    assert back["peak_to_sidelobe"] == 3.0


def test_peak_to_sidelobe_ratio():
    scores = np.zeros((11, 11))
    scores[5, 5] = 4.0
    scores[0, 0] = 1.0
    fld = point_field(scores)
    assert peak_to_sidelobe_ratio(fld, [[0.5, 0.5]], 0.2) == pytest.approx(4.0)
    assert peak_to_sidelobe_ratio(fld, [[0.5, 0.5], [0.0, 0.0]], 0.2) == float("inf")


# ---------------------------------------------------------------- Table 1 fixture behaviour

@pytest.fixture(scope="module")
def table1_runs():
    from elastic_dsm.config import config_from_dict, load_config
    from elastic_dsm.pipeline import reconstruct, simulate

    cfg = load_config("table1_2d")
    clean_cfg = config_from_dict({**cfg.to_dict(), "noise": None})
    return reconstruct(simulate(cfg), cfg), reconstruct(simulate(clean_cfg), clean_cfg)


def test_table1_global_argmax_near_a_source(table1_runs):
    noisy, _ = table1_runs
    z = noisy.field.grid.points[np.argmax(noisy.field.scores)]
    assert np.min(np.linalg.norm(TABLE1.locations - z, axis=1)) <= 0.1


def test_table1_four_peaks(table1_runs):
    noisy, _ = table1_runs
    assert len(noisy.peaks) == 4
    assert noisy.report.unmatched_truth == 0


def test_table1_noise_perturbs_field_by_order_eps(table1_runs):
    noisy, clean = table1_runs
    diff = np.abs(noisy.field.scores - clean.field.scores).max() / clean.field.scores.max()
    assert diff <= 5 * 0.05


def test_table1_argmax_within_one_cell_per_ball():
    lad = frequency_ladder(5.0, 1.2, 10)
    grid = SamplingGrid([-6, -6], [6, 6], (200, 200))
    quad = direction_quadrature(2, default_direction_resolution(2, lad.values[-1], grid.circumradius))
    fld = evaluate_field(exact_reduced_table(TABLE1, lad.values, quad), None, grid)
    pts = grid.points
    for s in TABLE1.locations:
        inside = np.linalg.norm(pts - s, axis=1) < 0.2
        best = pts[inside][np.argmax(fld.scores[inside])]
        assert np.all(np.abs(best - s) <= grid.spacing + 1e-12)


def test_reconstruction_is_deterministic(table1_runs):
    from elastic_dsm.config import load_config
    from elastic_dsm.pipeline import reconstruct, simulate

    cfg = load_config("table1_2d")
    again = reconstruct(simulate(cfg), cfg)
    assert again.report.to_dict() == table1_runs[0].report.to_dict()
