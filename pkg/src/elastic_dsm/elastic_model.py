"""Forward elastodynamics for moment-tensor point sources.

Conventions: a gradient matrix ``grad[i, j]`` holds d u_i / d x_j.  All field
routines accept a single point of shape (d,) or a batch of shape (n, d).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt
from typing import Sequence

import numpy as np

from .specfun import helmholtz_kernel_derivs

# Points closer than this to a source are rejected rather than evaluated.
SINGULAR_DISTANCE = 1e-8


@dataclass(frozen=True)
class LameParameters:
    lam: float
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"shear modulus must be positive, got {self.mu}")
        if not self.lam + 2 * self.mu > 0:
            raise ValueError("lambda + 2 mu must be positive")

    def check(self, dim: int) -> "LameParameters":
        if not dim * self.lam + 2 * self.mu > 0:
            raise ValueError(f"need {dim}*lambda + 2*mu > 0 for dim={dim}")
        return self

    @property
    def speeds(self) -> "WaveSpeeds":
        return WaveSpeeds(sqrt(self.lam + 2 * self.mu), sqrt(self.mu))

    def speed(self, alpha: str) -> float:
        if alpha == "p":
            return self.speeds.c_p
        if alpha == "s":
            return self.speeds.c_s
        raise ValueError(f"wave type must be 'p' or 's', got {alpha!r}")


@dataclass(frozen=True)
class WaveSpeeds:
    c_p: float
    c_s: float


@dataclass(frozen=True)
class MomentTensorSource:
    location: np.ndarray
    tensor: np.ndarray

    def __post_init__(self):
        loc = np.array(self.location, dtype=float)
        ten = np.array(self.tensor, dtype=float)
        d = loc.shape[0] if loc.ndim == 1 else -1
        if d not in (2, 3) or ten.shape != (d, d):
            raise ValueError(f"need a point in R^2/R^3 and a matching square tensor, got {loc.shape} and {ten.shape}")
        if not (np.all(np.isfinite(loc)) and np.all(np.isfinite(ten))):
            raise ValueError("source location and tensor must be finite")
        loc.flags.writeable = False
        ten.flags.writeable = False
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "tensor", ten)

    @property
    def dim(self) -> int:
        return self.location.shape[0]


@dataclass(frozen=True)
class SourceConfiguration:
    sources: tuple
    allow_zero: bool = field(default=False, compare=False)

    def __post_init__(self):
        srcs = tuple(
            s if isinstance(s, MomentTensorSource) else MomentTensorSource(*s) for s in self.sources
        )
        if not srcs:
            raise ValueError("a source configuration needs at least one source")
        dims = {s.dim for s in srcs}
        if len(dims) != 1:
            raise ValueError("all sources must share one dimension")
        if not self.allow_zero:
            for j, s in enumerate(srcs):
                if not np.any(s.tensor):
                    raise ValueError(f"source {j} has a zero moment tensor")
        if len(srcs) > 1 and self.min_distance_of(srcs) <= 0:
            raise ValueError("source locations must be pairwise distinct")
        object.__setattr__(self, "sources", srcs)

    @staticmethod
    def min_distance_of(sources) -> float:
        locs = np.array([s.location for s in sources])
        diff = locs[:, None, :] - locs[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        dist[np.diag_indices(len(locs))] = np.inf
        return float(dist.min())

    @property
    def dim(self) -> int:
        return self.sources[0].dim

    @property
    def m(self) -> int:
        return len(self.sources)

    @property
    def min_distance(self) -> float:
        """Smallest pairwise source distance (inf for a single source)."""
        return self.min_distance_of(self.sources) if self.m > 1 else float("inf")

    @property
    def locations(self) -> np.ndarray:
        return np.array([s.location for s in self.sources])

    @property
    def tensors(self) -> np.ndarray:
        return np.array([s.tensor for s in self.sources])

    @classmethod
    def from_arrays(cls, locations, tensors, allow_zero=False):
        return cls(tuple(MomentTensorSource(l, t) for l, t in zip(locations, tensors)), allow_zero)


def wavenumbers(medium: LameParameters, angular_frequency: float):
    """Return (k_p, k_s) = (omega / c_p, omega / c_s)."""
    if not angular_frequency > 0:
        raise ValueError("angular frequency must be positive")
    sp = medium.speeds
    return angular_frequency / sp.c_p, angular_frequency / sp.c_s


def _radial_tensors(stack, rho, order):
    """Cartesian derivative tensors of a radial function up to ``order``.

    ``stack`` holds d^q f / dr^q with shape (q, n); ``rho`` has shape (n, d).
    Returns [f, grad f, hess f, ...] with trailing derivative axes.
    """
    d = rho.shape[-1]
    r = np.linalg.norm(rho, axis=-1)
    e = rho / r[:, None]
    eye = np.eye(d)
    f0, f1 = stack[0], stack[1] if order >= 1 else None
    out = [f0]
    if order >= 1:
        out.append(f1[:, None] * e)
    if order >= 2:
        a2 = stack[2] - f1 / r
        out.append(
            a2[:, None, None] * np.einsum("ni,nj->nij", e, e)
            + (f1 / r)[:, None, None] * eye
        )
    if order >= 3:
        a3 = stack[3] - 3 * stack[2] / r + 3 * f1 / r**2
        de = np.einsum("ik,nj->nijk", eye, e)  # delta_ik e_j
        sym3 = de + np.einsum("jk,ni->nijk", eye, e) + np.einsum("ij,nk->nijk", eye, e)
        out.append(
            a3[:, None, None, None] * np.einsum("ni,nj,nk->nijk", e, e, e)
            + (a2 / r)[:, None, None, None] * sym3
        )
    if order >= 4:
        a4 = stack[4] - 6 * stack[3] / r + 15 * stack[2] / r**2 - 15 * f1 / r**3
        ee = np.einsum("ni,nj->nij", e, e)
        sym4_e = (
            np.einsum("il,njk->nijkl", eye, ee)
            + np.einsum("jl,nik->nijkl", eye, ee)
            + np.einsum("kl,nij->nijkl", eye, ee)
            + np.einsum("ij,nkl->nijkl", eye, ee)
            + np.einsum("ik,njl->nijkl", eye, ee)
            + np.einsum("jk,nil->nijkl", eye, ee)
        )
        sym4_d = (
            np.einsum("ij,kl->ijkl", eye, eye)
            + np.einsum("ik,jl->ijkl", eye, eye)
            + np.einsum("jk,il->ijkl", eye, eye)
        )
        out.append(
            a4[:, None, None, None, None] * np.einsum("ni,nj,nk,nl->nijkl", e, e, e, e)
            + (a3 / r)[:, None, None, None, None] * sym4_e
            + (a2 / r**2)[:, None, None, None, None] * sym4_d
        )
    return out


def _separation(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho = np.atleast_2d(x - y)
    r = np.linalg.norm(rho, axis=-1)
    if np.any(r < SINGULAR_DISTANCE):
        raise ValueError("evaluation point coincides with the source point")
    return rho, r, x.ndim == 1 and y.ndim == 1


def _green_parts(medium, omega, rho, r, order):
    """Derivative tensors (in x) of Phi_ks and of psi = Phi_ks - Phi_kp."""
    d = rho.shape[-1]
    medium.check(d)
    k_p, k_s = wavenumbers(medium, omega)
    phi_s = helmholtz_kernel_derivs(k_s, r, d, order).values
    phi_p = helmholtz_kernel_derivs(k_p, r, d, order).values
    return k_s, _radial_tensors(phi_s, rho, order), _radial_tensors(phi_s - phi_p, rho, order)


def green_tensor(medium: LameParameters, angular_frequency: float, x, y):
    """Navier Green tensor G(x, y); batched over leading axes of x - y."""
    rho, r, single = _separation(x, y)
    w2 = angular_frequency**2
    k_s, phi, psi = _green_parts(medium, angular_frequency, rho, r, 2)
    d = rho.shape[-1]
    g = (k_s**2 / w2) * phi[0][:, None, None] * np.eye(d) + psi[2] / w2
    return g[0] if single else g


def _green_x_grad(medium, omega, rho, r):
    # d/dx_l G_ik, index (n, i, k, l)
    d = rho.shape[-1]
    w2 = omega**2
    k_s, phi, psi = _green_parts(medium, omega, rho, r, 3)
    return (k_s**2 / w2) * np.einsum("ik,nl->nikl", np.eye(d), phi[1]) + psi[3] / w2


def green_tensor_source_grad(medium: LameParameters, angular_frequency: float, x, y):
    """d/dy_l G_ik(x, y) as an array indexed (i, k, l)."""
    rho, r, single = _separation(x, y)
    out = -_green_x_grad(medium, angular_frequency, rho, r)
    return out[0] if single else out


def radiated_field(config: SourceConfiguration, medium: LameParameters, angular_frequency: float,
                   x, with_gradient: bool = False):
    """Displacement radiated by the moment-tensor sources at x.

    u_i(x) = -sum_j sum_kl M_kl d/dy_l G_ik(x, s_j).  With ``with_gradient``
    also returns grad u (d u_i / d x_m), which needs fourth radial derivatives.
    """
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    d = pts.shape[-1]
    if d != config.dim:
        raise ValueError(f"point dimension {d} does not match sources of dimension {config.dim}")
    w2 = angular_frequency**2
    u = np.zeros(pts.shape, dtype=complex)
    grad = np.zeros(pts.shape + (d,), dtype=complex) if with_gradient else None
    eye = np.eye(d)
    for src in config.sources:
        rho, r, _ = _separation(pts, src.location)
        M = src.tensor
        k_s, phi, psi = _green_parts(medium, angular_frequency, rho, r, 4 if with_gradient else 3)
        # sum_kl M_kl d_l G_ik = (ks^2/w^2) (M grad Phi_s)_i + (1/w^2) sum_kl M_kl psi_ikl
        u += (k_s**2 / w2) * np.einsum("il,nl->ni", M, phi[1]) + np.einsum("kl,nikl->ni", M, psi[3]) / w2
        if with_gradient:
            grad += (k_s**2 / w2) * np.einsum("il,nlm->nim", M, phi[2]) + np.einsum("kl,niklm->nim", M, psi[4]) / w2
    if x.ndim == 1:
        return (u[0], grad[0]) if with_gradient else u[0]
    return (u, grad) if with_gradient else u


def _check_unit(v, what="normal"):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1)
    if np.any(np.abs(n - 1.0) > 1e-12):
        raise ValueError(f"{what} must be a unit vector")
    return v


def traction(medium: LameParameters, normal, u_value, grad_u):
    """Surface traction T_nu u from the displacement gradient.

    2D: 2 mu (nu . grad) u + lambda nu div u - mu nu_perp div_perp u
    3D: 2 mu (nu . grad) u + lambda nu div u + mu nu x curl u
    Both equal sigma(u) nu; the 3D curl term carries a plus sign because
    nu x curl u = grad(nu . u) - (nu . grad) u.
    ``u_value`` is accepted for symmetry with the field routines but unused.
    Batched over leading axes of ``normal`` and ``grad_u``.
    """
    nu = _check_unit(normal)
    g = np.asarray(grad_u)
    d = g.shape[-1]
    lam, mu = medium.lam, medium.mu
    dir_deriv = np.einsum("...ij,...j->...i", g, nu)
    div = np.trace(g, axis1=-2, axis2=-1)
    out = 2 * mu * dir_deriv + lam * nu * div[..., None]
    if d == 2:
        nu_perp = np.stack([-nu[..., 1], nu[..., 0]], axis=-1)
        div_perp = g[..., 1, 0] - g[..., 0, 1]
        out = out - mu * nu_perp * div_perp[..., None]
    elif d == 3:
        curl = np.stack(
            [g[..., 2, 1] - g[..., 1, 2], g[..., 0, 2] - g[..., 2, 0], g[..., 1, 0] - g[..., 0, 1]], axis=-1
        )
        out = out + mu * np.cross(np.broadcast_to(nu, curl.shape), curl)
    else:
        raise ValueError(f"unsupported dimension {d}")
    return out
