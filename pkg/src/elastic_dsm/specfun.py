"""Bessel-type special functions and radial derivative stacks of the
Helmholtz fundamental solution.

Cylindrical J_n / Y_n values come from ``scipy.special``; everything built on
top of them (Hankel recurrence, spherical j0/j2 closed forms, derivative
stacks) lives here.  All functions accept scalars or numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from scipy import special

# Below this argument spherical_j switches from the closed form to a Taylor series.
SPHERICAL_SERIES_THRESHOLD = 1.0
SPHERICAL_SERIES_TERMS = 10
MAX_STACK_ORDER = 4


def _check_nonneg(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("argument must be finite")
    if np.any(x < 0):
        raise ValueError("argument must be non-negative")
    return x


def _scalar_or_array(out, like):
    return out.item() if np.ndim(like) == 0 else out


def bessel_j(order, x):
    """Cylindrical Bessel function J_order(x) for order in {0, 1, 2}."""
    if order not in (0, 1, 2):
        raise ValueError(f"unsupported Bessel order {order!r}")
    xa = _check_nonneg(x)
    return _scalar_or_array(special.jv(order, xa), x)


def _spherical_series(n, t, terms=SPHERICAL_SERIES_TERMS):
    # j_n(t) = t^n sum_k (-t^2/2)^k / (k! (2n+2k+1)!!)
    t = np.asarray(t, dtype=float)
    term = t**n / float(np.prod(np.arange(1, 2 * n + 2, 2)))
    acc = term
    for k in range(1, terms):
        term = term * (-0.5 * t * t) / (k * (2 * n + 2 * k + 1))
        acc = acc + term
    return acc


def _j0_series(t):
    return _spherical_series(0, t)


def _j2_series(t):
    return _spherical_series(2, t)


def _j0_closed(t):
    return np.sin(t) / t


def _j2_closed(t):
    return (3.0 / t**2 - 1.0) * np.sin(t) / t - 3.0 * np.cos(t) / t**2


def spherical_j(order, x):
    """Spherical Bessel j0 or j2.

    Uses sin t / t and (3/t^2 - 1) sin t / t - 3 cos t / t^2, with a Taylor
    branch below ``SPHERICAL_SERIES_THRESHOLD``.
    """
    if order not in (0, 2):
        raise ValueError(f"unsupported spherical Bessel order {order!r}")
    t = _check_nonneg(x)
    series, closed = (_j0_series, _j0_closed) if order == 0 else (_j2_series, _j2_closed)
    small = t < SPHERICAL_SERIES_THRESHOLD
    safe = np.where(small, 1.0, t)
    out = np.where(small, series(t), closed(safe))
    return _scalar_or_array(np.asarray(out, dtype=float), x)


def hankel1(order, x):
    """Hankel function of the first kind, orders 0..4.

    Orders 0 and 1 are J + iY directly; higher orders use the upward
    recurrence H_{n+1} = (2n/x) H_n - H_{n-1}.
    """
    if order not in range(5):
        raise ValueError(f"unsupported Hankel order {order!r}")
    xa = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(xa)) or np.any(xa <= 0):
        raise ValueError("hankel1 requires finite x > 0")
    h_prev = special.jv(0, xa) + 1j * special.yv(0, xa)
    if order == 0:
        return _scalar_or_array(h_prev, x)
    h = special.jv(1, xa) + 1j * special.yv(1, xa)
    for n in range(1, order):
        h_prev, h = h, (2.0 * n / xa) * h - h_prev
    return _scalar_or_array(h, x)


@dataclass(frozen=True)
class RadialDerivStack:
    """d^q/dr^q Phi_k(r) for q = 0..max_order.

    ``values`` has shape (max_order + 1,) + shape(r).
    """

    k: float
    r: np.ndarray
    dim: int
    values: np.ndarray

    @property
    def max_order(self) -> int:
        return self.values.shape[0] - 1


def _hankel_derivs(k, r, max_order):
    # d^q/dx^q H0(x) = 2^-q sum_m (-1)^m C(q,m) H_{2m-q}(x),  H_{-n} = (-1)^n H_n
    x = k * r
    h = [hankel1(n, x) for n in range(max_order + 1)]
    out = []
    for q in range(max_order + 1):
        acc = 0.0
        for m in range(q + 1):
            n = 2 * m - q
            hn = h[n] if n >= 0 else (-1) ** (-n) * h[-n]
            acc = acc + (-1) ** m * comb(q, m) * hn
        out.append(0.25j * k**q * acc / 2**q)
    return out


def _spherical_wave_derivs(k, r, max_order):
    # Leibniz on e^{ikr} * r^{-1} / (4 pi)
    e = np.exp(1j * k * r) / (4.0 * np.pi)
    out = []
    for q in range(max_order + 1):
        acc = 0.0
        for m in range(q + 1):
            inv_deriv = (-1) ** m * factorial(m) * r ** (-m - 1.0)
            acc = acc + comb(q, m) * (1j * k) ** (q - m) * inv_deriv
        out.append(e * acc)
    return out


def helmholtz_kernel_derivs(k, r, dim, max_order=0) -> RadialDerivStack:
    """Radial derivative stack of the outgoing Helmholtz fundamental solution."""
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim!r}")
    if not 0 <= max_order <= MAX_STACK_ORDER:
        raise ValueError(f"max_order must lie in 0..{MAX_STACK_ORDER}")
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    ra = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(ra)) or np.any(ra <= 0):
        raise ValueError("radial distance must be positive")
    derivs = _hankel_derivs if dim == 2 else _spherical_wave_derivs
    values = np.array(np.broadcast_arrays(*derivs(k, ra, max_order)), dtype=complex)
    return RadialDerivStack(k=float(k), r=ra, dim=dim, values=values)


def helmholtz_kernel(k, r, dim):
    """Phi_k(r): (i/4) H0(kr) in 2D, e^{ikr}/(4 pi r) in 3D."""
    stack = helmholtz_kernel_derivs(k, r, dim, 0)
    return _scalar_or_array(stack.values[0], r)
