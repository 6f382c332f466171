"""Test functions, the reduced boundary functional and the sampling indicator.

The indicator at a sampling point z is

    I(z) = d / (2^(d-1) pi i |W|) * sum_{omega in W} (1/omega)
           * integral over S^(d-1) of (R_p + R_s)(xhat, omega) (x) xhat * exp(i omega xhat.z)

where R_alpha pairs boundary Cauchy data recorded at c_alpha * omega with
plane-wave test functions.  R only depends on (xhat, omega), so it is
tabulated once (``ReducedTable``) and reused for every z.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from . import specfun
from .elastic_model import LameParameters, SourceConfiguration, _check_unit, traction
from .synth_data import ALPHAS, CauchyDataset

# Directions processed per block when tabulating R from boundary data.
DIRECTION_BLOCK = 2048


@dataclass(frozen=True, eq=False)
class DirectionQuadrature:
    """Quadrature on the unit circle/sphere.

    For dim 3 the rule is a product rule: direction q = i * azimuth_count + k
    has polar index i and azimuth index k.
    """

    dim: int
    directions: np.ndarray
    weights: np.ndarray
    polar_count: int = 0
    azimuth_count: int = 0

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def direction_quadrature(dim: int, resolution: int) -> DirectionQuadrature:
    """2D: ``resolution`` equispaced angles.  3D: Gauss-Legendre in cos(theta)
    with ``resolution`` nodes times 2*resolution equispaced azimuths."""
    if resolution < 4:
        raise ValueError(f"direction resolution must be >= 4, got {resolution}")
    if dim == 2:
        phi = 2 * np.pi * np.arange(resolution) / resolution
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return DirectionQuadrature(2, dirs, np.full(resolution, 2 * np.pi / resolution))
    if dim == 3:
        ct, wt = np.polynomial.legendre.leggauss(resolution)
        naz = 2 * resolution
        phi = 2 * np.pi * np.arange(naz) / naz
        st = np.sqrt(1.0 - ct**2)
        dirs = np.stack(
            [np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)), np.repeat(ct[:, None], naz, axis=1)], axis=-1
        ).reshape(-1, 3)
        weights = np.repeat(wt * (2 * np.pi / naz), naz)
        return DirectionQuadrature(3, dirs, weights, resolution, naz)
    raise ValueError(f"dim must be 2 or 3, got {dim!r}")


def default_direction_resolution(dim: int, omega_max: float, radius: float) -> int:
    """Resolution that resolves exp(i omega xhat.z) for |z| <= radius."""
    band = ceil(omega_max * radius)
    return 2 * band + 16 if dim == 2 else band + 8


# ---------------------------------------------------------------- test functions

def _projector(xhat, alpha):
    d = xhat.shape[-1]
    outer = np.einsum("...i,...j->...ij", xhat, xhat)
    if alpha == "p":
        return outer
    if alpha == "s":
        return np.eye(d) - outer
    raise ValueError(f"wave type must be 'p' or 's', got {alpha!r}")


def test_function(direction, y, alpha: str, scaled_frequency: float, medium: LameParameters):
    """V_alpha(xhat, y, Omega): projector times exp(-i Omega xhat.y / c_alpha).

    Batched over leading axes of ``y``.
    """
    xhat = _check_unit(direction, "direction")
    y = np.asarray(y, dtype=float)
    phase = np.exp(-1j * scaled_frequency * (y @ xhat) / medium.speed(alpha))
    return _projector(xhat, alpha) * phase[..., None, None]


test_function.__test__ = False  # not a pytest test


def test_function_traction(direction, y, normal, alpha: str, medium: LameParameters, scaled_frequency: float):
    """T_nu applied to each column of V_alpha, returned column-wise.

    Column k is q_k exp(i kappa d.y) with gradient i kappa q_k d^T, where
    kappa d = -Omega xhat / c_alpha.
    """
    xhat = _check_unit(direction, "direction")
    nu = _check_unit(normal, "normal")
    V = test_function(xhat, y, alpha, scaled_frequency, medium)  # (..., i, k)
    wave = -scaled_frequency / medium.speed(alpha) * xhat
    # grad of column k: 1j * V[..., :, k] (x) wave  -> (..., k, i, j)
    grads = 1j * np.einsum("...ik,j->...kij", V, wave)
    cols = traction(medium, nu[..., None, :], None, grads)  # (..., k, i)
    return np.swapaxes(cols, -1, -2)


test_function_traction.__test__ = False


# ---------------------------------------------------------------- reduced functional

def reduced_functional(dataset: CauchyDataset, direction, omega_index: int, alpha: str):
    """Boundary quadrature of [T_nu V_alpha]^T u - V_alpha^T T_nu u at c_alpha * omega."""
    u, t = dataset.record(omega_index, alpha)
    g = dataset.geometry
    medium = dataset.medium
    scaled = medium.speed(alpha) * dataset.ladder.values[omega_index]
    V = test_function(direction, g.nodes, alpha, scaled, medium)
    TV = test_function_traction(direction, g.nodes, g.normals, alpha, medium, scaled)
    integrand = np.einsum("nki,nk->ni", TV, u) - np.einsum("nki,nk->ni", V, t)
    return integrand.T @ g.weights


def reduced_functional_exact(config: SourceConfiguration, direction, omega: float):
    """Closed form sum_j i omega M_j xhat exp(-i omega xhat.s_j); batched over directions."""
    xhat = np.asarray(direction, dtype=float)
    phase = np.exp(-1j * omega * (xhat @ config.locations.T))  # (..., m)
    mx = np.einsum("jab,...b->...ja", config.tensors, xhat)
    return 1j * omega * np.einsum("...j,...ja->...a", phase, mx)


@dataclass(frozen=True, eq=False)
class ReducedTable:
    """(R_p + R_s)(xhat_q, omega_n) for every quadrature direction and rung."""

    quad: DirectionQuadrature
    omegas: np.ndarray
    values: np.ndarray  # (N, Q, d)
    omega_star: float = 0.0

    def __post_init__(self):
        if not self.omega_star:
            object.__setattr__(self, "omega_star", float(np.min(self.omegas)))

    @property
    def dim(self) -> int:
        return self.quad.dim


def _table_from_moments(xhat, omega, medium, cb_p, ct_p, cb_s, ct_s):
    # cb[q] = sum_y w phi nu u^T,  ct[q] = sum_y w phi t, with phi = exp(-i omega xhat.y)
    lam, mu = medium.lam, medium.mu
    xbx_p = np.einsum("qi,qij,qj->q", xhat, cb_p, xhat)
    r_p = xhat * (
        -1j * omega * (lam * np.trace(cb_p, axis1=1, axis2=2) + 2 * mu * xbx_p) - np.einsum("qi,qi->q", xhat, ct_p)
    )[:, None]
    xbx_s = np.einsum("qi,qij,qj->q", xhat, cb_s, xhat)
    r_s = -1j * omega * mu * (
        np.einsum("qji,qj->qi", cb_s, xhat) + np.einsum("qij,qj->qi", cb_s, xhat) - 2 * xhat * xbx_s[:, None]
    ) - ct_s + xhat * np.einsum("qi,qi->q", xhat, ct_s)[:, None]
    return r_p + r_s


def reduced_table(dataset: CauchyDataset, quad: DirectionQuadrature, omega_indices=None) -> ReducedTable:
    """Tabulate R_p + R_s for all directions from boundary data.

    Uses the factorization of the integrand into node moments (nu u^T, t)
    weighted by exp(-i omega xhat.y), so each block is one matrix product.
    """
    g = dataset.geometry
    if quad.dim != g.dim:
        raise ValueError("quadrature and dataset dimensions differ")
    d = g.dim
    idx = _indices(dataset.ladder.count, omega_indices)
    out = np.empty((len(idx), quad.size, d), dtype=complex)
    for row, n in enumerate(idx):
        omega = dataset.ladder.values[n]
        cols = []
        for alpha in ALPHAS:
            u, t = dataset.record(n, alpha)
            B = np.einsum("yi,yj->yij", g.normals, u).reshape(-1, d * d)
            cols += [B * g.weights[:, None], t * g.weights[:, None]]
        W = np.concatenate(cols, axis=1)
        for start in range(0, quad.size, DIRECTION_BLOCK):
            xh = quad.directions[start:start + DIRECTION_BLOCK]
            phase = np.exp(-1j * omega * (xh @ g.nodes.T))
            m = phase @ W
            k = d * d + d
            cb_p = m[:, : d * d].reshape(-1, d, d)
            ct_p = m[:, d * d: k]
            cb_s = m[:, k: k + d * d].reshape(-1, d, d)
            ct_s = m[:, k + d * d:]
            out[row, start:start + len(xh)] = _table_from_moments(xh, omega, dataset.medium, cb_p, ct_p, cb_s, ct_s)
    return ReducedTable(quad, dataset.ladder.values[idx].copy(), out, dataset.ladder.omega_star)


def exact_reduced_table(config: SourceConfiguration, omegas, quad: DirectionQuadrature,
                        omega_star: float = 0.0) -> ReducedTable:
    """Table filled from the closed form (noise-free, quadrature-free data)."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    vals = np.stack([reduced_functional_exact(config, quad.directions, w) for w in omegas])
    return ReducedTable(quad, omegas, vals, omega_star)


def _indices(count, omega_indices):
    if omega_indices is None:
        return list(range(count))
    idx = [int(i) for i in np.atleast_1d(omega_indices)]
    if not idx:
        raise ValueError("omega_indices must be non-empty")
    for i in idx:
        if not 0 <= i < count:
            raise KeyError(f"no record for omega_index={i}")
    return idx


# ---------------------------------------------------------------- lemma kernel

def _reflection(zhat):
    # [[cos 2phi, sin 2phi], [sin 2phi, -cos 2phi]] = 2 zhat zhat^T - I
    z1, z2 = zhat[..., 0], zhat[..., 1]
    return np.stack([np.stack([z1**2 - z2**2, 2 * z1 * z2], -1), np.stack([2 * z1 * z2, z2**2 - z1**2], -1)], -2)


def lemma1_kernel(omega: float, z):
    """Closed form of the integral of xhat xhat^T exp(i omega xhat.z) over S^(d-1).

    2D: pi (J0 I - J2 A(zhat)) with A = 2 zhat zhat^T - I; 3D: 4 pi / 3 (j0 I + j2 (I - 3 zhat zhat^T)).
    Batched over leading axes of z; |z| < 1e-12 returns the z -> 0 limit.
    """
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    r = np.linalg.norm(z, axis=-1)
    tiny = r < 1e-12
    zhat = np.where(tiny[..., None], 0.0, z / np.where(tiny, 1.0, r)[..., None])
    t = np.where(tiny, 0.0, omega * r)
    eye = np.eye(d)
    if d == 2:
        j0 = np.asarray(specfun.bessel_j(0, t))
        j2 = np.asarray(specfun.bessel_j(2, t))
        return np.pi * (j0[..., None, None] * eye - j2[..., None, None] * _reflection(zhat))
    if d == 3:
        j0 = np.asarray(specfun.spherical_j(0, t))
        j2 = np.asarray(specfun.spherical_j(2, t))
        aniso = eye - 3 * np.einsum("...i,...j->...ij", zhat, zhat)
        return 4 * np.pi / 3 * (j0[..., None, None] * eye + j2[..., None, None] * aniso)
    raise ValueError(f"unsupported dimension {d}")


# ---------------------------------------------------------------- indicator

@dataclass(frozen=True, eq=False)
class IndicatorValue:
    matrix: np.ndarray

    @property
    def score(self) -> float:
        return float(np.sum(np.abs(self.matrix) ** 2))


def indicator_prefactor(dim: int) -> float:
    return dim / (2 ** (dim - 1) * np.pi)


def indicator_coefficients(table: ReducedTable, omega_indices=None):
    """Per-rung (omega, C) with C[q] such that I(z) = sum_n sum_q C_n[q] exp(i omega_n xhat_q.z).

    C already carries the 1/(i |W|) normalization, the 1/omega weight and the
    direction quadrature weight.
    """
    idx = _indices(len(table.omegas), omega_indices)
    q = table.quad
    pref = indicator_prefactor(q.dim) / (1j * len(idx))
    out = []
    for n in idx:
        omega = table.omegas[n]
        C = (pref / omega) * np.einsum("q,qi,qj->qij", q.weights, table.values[n], q.directions)
        out.append((omega, C))
    return out


def indicator_at(table: ReducedTable, points, omega_indices=None, block: int = 256):
    """Indicator matrices at arbitrary points, shape (n, d, d)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = table.dim
    out = np.zeros((len(pts), d, d), dtype=complex)
    dirs = table.quad.directions
    for omega, C in indicator_coefficients(table, omega_indices):
        Cf = C.reshape(len(dirs), d * d)
        for s in range(0, len(pts), block):
            ph = np.exp(1j * omega * (pts[s:s + block] @ dirs.T))
            out[s:s + block] += (ph @ Cf).reshape(-1, d, d)
    return out


def indicator(data, quad: DirectionQuadrature | None, z, omega_indices=None) -> IndicatorValue:
    """Indicator at a single sampling point.

    ``data`` is a CauchyDataset (R tabulated on ``quad``) or a prebuilt
    ReducedTable (``quad`` may then be None).  A singleton ``omega_indices``
    gives the single-frequency indicator; a noisy dataset gives the perturbed
    indicator through the same path.
    """
    table = data if isinstance(data, ReducedTable) else reduced_table(data, quad, None)
    return IndicatorValue(indicator_at(table, np.asarray(z, dtype=float)[None], omega_indices)[0])


def indicator_closed_form(config: SourceConfiguration, omegas, z):
    """Indicator with exact R and exact direction integration (lemma kernels).

    Equals (1/N) sum_n sum_j M_j K(omega_n, z - s_j) scaled so K(.,0) -> I.
    Always a real matrix.
    """
    z = np.asarray(z, dtype=float)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    d = config.dim
    acc = np.zeros(z.shape[:-1] + (d, d))
    for omega in omegas:
        for src in config.sources:
            acc = acc + src.tensor @ lemma1_kernel(omega, z - src.location)
    return indicator_prefactor(d) * acc / len(omegas)
