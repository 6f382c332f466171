"""Oracle self-checks run by ``elastic-dsm validate``.

Each check returns (check_id, residual, tolerance).  ``quick`` covers the
lemma kernels and finite-difference suites; ``full`` adds the Betti identity
on a dense circle and the exact-data indicator decay in N.
"""
from __future__ import annotations

import itertools

import numpy as np

from . import specfun
from .elastic_model import (
    LameParameters,
    SourceConfiguration,
    green_tensor,
    green_tensor_source_grad,
    radiated_field,
    traction,
)
from .imaging import (
    default_direction_resolution,
    direction_quadrature,
    exact_reduced_table,
    indicator_at,
    lemma1_kernel,
    reduced_functional,
    reduced_functional_exact,
)
from .synth_data import build_geometry, frequency_ladder, generate_cauchy_data

TABLE1 = SourceConfiguration.from_arrays(
    [[0, 4], [-3, -3], [3, -3], [4, -2]],
    [[[4, 2], [2, 3]], [[-3, 0], [0, -4]], [[0, 3], [3, 0]], [[3, 2], [2, 0]]],
)
UNIT = LameParameters(1.0, 1.0)


def lemma_kernel(dim):
    worst = 0.0
    omega = 5.0
    rng = np.random.default_rng(11)
    dirs = [np.eye(dim)[0], np.eye(dim)[-1], np.full(dim, dim**-0.5)] + [_unit(rng, dim) for _ in range(3)]
    for wz, zhat in itertools.product((0.5, 3.0, 10.0, 40.0), dirs):
        z = wz / omega * zhat
        q = direction_quadrature(dim, default_direction_resolution(dim, omega, np.linalg.norm(z)))
        phase = np.exp(1j * omega * q.directions @ z)
        quad = np.einsum("q,qi,qj->ij", q.weights * phase, q.directions, q.directions)
        worst = max(worst, float(np.abs(quad - lemma1_kernel(omega, z)).max()))
    return f"lemma_kernel_{dim}d", worst, 1e-8


def hankel_recurrence():
    x = np.linspace(0.5, 100, 400)
    worst = 0.0
    for n in (1, 2, 3):
        h = [specfun.hankel1(k, x) for k in (n - 1, n, n + 1)]
        worst = max(worst, float(np.max(np.abs(h[2] - 2 * n / x * h[1] + h[0]) / np.abs(h[2]))))
    return "hankel_recurrence", worst, 1e-12


def _rel(a, b):
    return float(np.abs(a - b).max() / np.abs(b).max())


def source_gradient_fd(rng, trials=20):
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 4))
        w = rng.uniform(0.5, 5.0)
        y = rng.uniform(-1, 1, d)
        x = y + rng.uniform(1.5, 4.0) * _unit(rng, d)
        h = 1e-5
        fd = np.stack([(green_tensor(UNIT, w, x, y + h * e) - green_tensor(UNIT, w, x, y - h * e)) / (2 * h)
                       for e in np.eye(d)], axis=-1)
        worst = max(worst, _rel(green_tensor_source_grad(UNIT, w, x, y), fd))
    return "green_source_grad_fd", worst, 1e-5


def field_gradient_fd(rng, trials=20):
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 4))
        cfg = SourceConfiguration.from_arrays([rng.uniform(-1, 1, d)], [rng.normal(size=(d, d))])
        w = rng.uniform(0.5, 5.0)
        x = rng.uniform(-1, 1, d) + rng.uniform(2.0, 4.0) * _unit(rng, d)
        _, g = radiated_field(cfg, UNIT, w, x, True)
        h = 1e-5
        fd = np.stack([(radiated_field(cfg, UNIT, w, x + h * e) - radiated_field(cfg, UNIT, w, x - h * e)) / (2 * h)
                       for e in np.eye(d)], axis=-1)
        worst = max(worst, _rel(g, fd))
    return "radiated_gradient_fd", worst, 1e-5


def plane_wave_traction_fd(rng, trials=20):
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 4))
        kappa = rng.uniform(0.5, 8.0)
        dvec, nu = _unit(rng, d), _unit(rng, d)
        q = rng.normal(size=d) + 1j * rng.normal(size=d)
        y = rng.uniform(-1, 1, d)

        def u(p):
            return q * np.exp(1j * kappa * dvec @ p)

        exact = 1j * kappa * np.outer(q, dvec) * np.exp(1j * kappa * dvec @ y)
        h = 1e-6
        fd = np.stack([(u(y + h * e) - u(y - h * e)) / (2 * h) for e in np.eye(d)], axis=-1)
        worst = max(worst, _rel(traction(UNIT, nu, u(y), fd), traction(UNIT, nu, u(y), exact)))
    return "plane_wave_traction_fd", worst, 1e-5


def betti_identity():
    lad = frequency_ladder(5.0, 1.2, 3)
    ds = generate_cauchy_data(TABLE1, UNIT, build_geometry(2, 10.0, 4096), lad)
    rng = np.random.default_rng(16)
    worst = 0.0
    for n, omega in enumerate(lad.values):
        for th in rng.uniform(0, 2 * np.pi, 16):
            xh = np.array([np.cos(th), np.sin(th)])
            r = reduced_functional(ds, xh, n, "p") + reduced_functional(ds, xh, n, "s")
            ex = reduced_functional_exact(TABLE1, xh, omega)
            worst = max(worst, float(np.linalg.norm(r - ex) / np.linalg.norm(ex)))
    return "betti_identity", worst, 1e-6


def decay_errors(config=TABLE1, counts=(5, 10, 20, 40), omega_star=5.0, eta=1.2):
    """max_j ||I^N(s_j) - M_j||_F on the exact-R path for each N."""
    rho = float(np.max(np.linalg.norm(config.locations, axis=1)))
    errs = []
    for N in counts:
        lad = frequency_ladder(omega_star, eta, N)
        q = direction_quadrature(config.dim, default_direction_resolution(config.dim, lad.values[-1], rho))
        vals = indicator_at(exact_reduced_table(config, lad.values, q), config.locations)
        errs.append(max(float(np.linalg.norm(vals[j] - s.tensor)) for j, s in enumerate(config.sources)))
    return errs


def theorem_decay_ratio(errs):
    return "theorem_decay_ratio", errs[-1] / errs[0], 0.5


def theorem_decay_monotone(errs):
    """Largest increase between consecutive N; zero when non-increasing."""
    return "theorem_decay_monotone", max(max(b - a for a, b in zip(errs, errs[1:])), 0.0), 0.0


def _unit(rng, d):
    v = rng.normal(size=d)
    return v / np.linalg.norm(v)


def run_checks(level: str = "quick", seed: int = 0):
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    rng = np.random.default_rng(seed)
    results = [
        lemma_kernel(2),
        lemma_kernel(3),
        hankel_recurrence(),
        source_gradient_fd(rng),
        field_gradient_fd(rng),
        plane_wave_traction_fd(rng),
    ]
    if level == "full":
        errs = decay_errors()
        results += [betti_identity(), theorem_decay_ratio(errs), theorem_decay_monotone(errs)]
    return results
