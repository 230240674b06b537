"""Complete elliptic integrals and Jacobi elliptic functions for complex input.

Only the pieces the rotating-frame solutions need are provided:
K(m) through the arithmetic-geometric mean, sn/cn/dn through the descending
Landen (Gauss) transformation, and Carlson's R_F for the incomplete integral
of the first kind.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import BranchCutError, DivergenceError, PoleError

__all__ = [
    "agm",
    "complete_elliptic_K",
    "jacobi_pq",
    "carlson_rf",
    "incomplete_elliptic_F",
    "inverse_cn",
    "inverse_dn",
]

_EPS = 2.0**-52
POLE_THRESHOLD = 1e-6


def agm(a, b, max_iter=64):
    """Arithmetic-geometric mean with the "right" sign choice at each step.

    Works elementwise on arrays. For complex input the square root is taken
    so that ``|a_n - b_n| <= |a_n + b_n|``, which is the branch that
    converges to the principal value of K.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    a, b = np.broadcast_arrays(a, b)
    a = a.copy()
    b = b.copy()
    for _ in range(max_iter):
        an = 0.5 * (a + b)
        bn = np.sqrt(a * b)
        flip = np.abs(an - bn) > np.abs(an + bn)
        bn = np.where(flip, -bn, bn)
        done = np.abs(an - bn) <= 4 * _EPS * np.abs(an)
        a, b = an, bn
        if np.all(done):
            break
    return a


def _side_of(m, side):
    if side is not None:
        if side not in ("below", "above"):
            raise ValueError(f"side must be 'below' or 'above', got {side!r}")
        return side
    if isinstance(m, complex) and m.imag == 0.0 and math.copysign(1.0, m.imag) < 0:
        return "below"
    return None


def complete_elliptic_K(m, side=None):
    """Complete elliptic integral of the first kind K(m), parameter convention.

    ``K(m) = int_0^{pi/2} dθ / sqrt(1 - m sin^2 θ)``.

    Off the cut ``[1, inf)`` the principal value is returned. On the cut the
    side must be given, either through ``side`` ("below" means ``m - i0+``,
    "above" means ``m + i0+``) or by passing a complex scalar whose imaginary
    part is ``-0.0``. Otherwise :class:`BranchCutError` is raised.
    ``m = 1`` raises :class:`DivergenceError`.
    """
    scalar = np.isscalar(m)
    arr = np.asarray(m)
    is_real = not np.iscomplexobj(arr)
    mc = arr.astype(complex)
    if np.any(mc == 1.0):
        raise DivergenceError("K(m) diverges at m = 1")
    on_cut = (mc.imag == 0.0) & (mc.real > 1.0)
    k_prime = np.sqrt(1.0 - mc)
    if np.any(on_cut):
        which = _side_of(m if scalar else None, side)
        if which is None:
            raise BranchCutError(
                "m lies on the branch cut [1, inf); pass side='below' or 'above'"
            )
        # m - i0+  ->  1 - m + i0+  ->  sqrt = +i sqrt(m - 1)
        root = 1j * np.sqrt(np.where(on_cut, mc.real - 1.0, 0.0))
        if which == "above":
            root = -root
        k_prime = np.where(on_cut, root, k_prime)
    out = np.pi / (2.0 * agm(1.0, k_prime))
    if is_real and not np.any(on_cut):
        out = out.real
    if scalar:
        return out.item()
    return out


def _small_m(u, m):
    # sn, cn, dn to first order in m (A&S 16.13)
    s = np.sin(u)
    c = np.cos(u)
    w = 0.25 * m * (u - s * c)
    return s - w * c, c + w * s, 1.0 - 0.5 * m * s * s


def _landen(u, m):
    levels = []
    while True:
        if np.all(np.abs(m) < 1e-17):
            break
        kp = np.sqrt(1.0 - m)
        r = (1.0 - kp) / (1.0 + kp)
        levels.append(r)
        u = u / (1.0 + r)
        m = r * r
        if len(levels) > 40:
            raise ArithmeticError("Landen descent failed to converge")
    sn, cn, dn = _small_m(u, m)
    for r in reversed(levels):
        s2 = sn * sn
        den = 1.0 + r * s2
        sn, cn, dn = (1.0 + r) * sn / den, cn * dn / den, (1.0 - r * s2) / den
    return sn, cn, dn


def _reduce(u, m):
    """Shift u by multiples of the periods 4K and 4iK' towards the origin."""
    m_arr = np.asarray(m, dtype=complex)
    if m_arr.ndim or np.abs(m_arr) < 1e-14:
        return u
    mm = complex(m_arr)
    try:
        if mm.imag == 0.0 and mm.real < 0.0:
            w1 = 4.0 * complete_elliptic_K(mm.real)
            w2 = 4j * complete_elliptic_K(complex(1.0 - mm.real, -0.0))
        else:
            w1 = 4.0 * complete_elliptic_K(mm)
            w2 = 4j * complete_elliptic_K(1.0 - mm)
    except (BranchCutError, DivergenceError):
        return u
    mat = np.array([[w1.real, w2.real], [w1.imag, w2.imag]]) if isinstance(w1, complex) else np.array(
        [[w1, np.real(w2)], [0.0, np.imag(w2)]]
    )
    if abs(np.linalg.det(mat)) < 1e-12:
        return u
    uu = np.asarray(u, dtype=complex)
    coef = np.linalg.solve(mat, np.vstack([uu.ravel().real, uu.ravel().imag]))
    shift = np.round(coef[0]) * w1 + np.round(coef[1]) * w2
    return uu - shift.reshape(uu.shape)


def jacobi_pq(u, m):
    """Jacobi elliptic functions ``(sn, cn, dn)`` of complex argument.

    ``m`` may be any complex number other than 1. Real parameters above one
    are mapped through the reciprocal-modulus transformation; everything else
    goes through the descending Landen transformation, which needs
    ``Re sqrt(1 - m) > 0``.

    Raises :class:`PoleError` when ``u`` is within ``POLE_THRESHOLD`` of a
    pole (the common pole set of sn, cn and dn, located at ``iK'`` modulo the
    period lattice).
    """
    scalar = np.isscalar(u) and np.isscalar(m)
    u = np.asarray(u, dtype=complex)
    m_arr = np.asarray(m, dtype=complex)
    u, m_b = np.broadcast_arrays(u, m_arr)
    u = u.copy()
    m_b = m_b.copy()
    big = (m_b.imag == 0.0) & (m_b.real > 1.0)
    sn = np.empty(u.shape, dtype=complex)
    cn = np.empty(u.shape, dtype=complex)
    dn = np.empty(u.shape, dtype=complex)
    rest = ~big
    if np.any(big):
        k = np.sqrt(m_b[big].real)
        ub = u[big] * k
        if m_arr.ndim == 0:
            ub = _reduce(ub, 1.0 / complex(m_arr))
        s2, c2, d2 = _landen(ub, 1.0 / m_b[big])
        sn[big], cn[big], dn[big] = s2 / k, d2, c2
    if np.any(rest):
        ur = u[rest]
        mr = m_b[rest]
        if m_arr.ndim == 0:
            ur = _reduce(ur, complex(m_arr))
        sn[rest], cn[rest], dn[rest] = _landen(ur, mr)
    bad = ~np.isfinite(sn) | (np.abs(sn) > 1.0 / POLE_THRESHOLD)
    if np.any(bad):
        idx = np.flatnonzero(bad.ravel())[0]
        raise PoleError(
            "Jacobi functions evaluated within the pole threshold",
            pole=complex(u.ravel()[idx]),
        )
    if scalar:
        return complex(sn.item()), complex(cn.item()), complex(dn.item())
    return sn, cn, dn


def carlson_rf(x, y, z, rtol=1e-15):
    """Carlson's symmetric integral R_F(x, y, z) by duplication.

    Arguments may be complex but must avoid the closed negative real axis
    (at most one of them may be zero).
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    z = np.asarray(z, dtype=complex)
    x, y, z = (a.copy() for a in np.broadcast_arrays(x, y, z))
    for _ in range(100):
        sx, sy, sz = np.sqrt(x), np.sqrt(y), np.sqrt(z)
        lam = sx * sy + sx * sz + sy * sz
        x = 0.25 * (x + lam)
        y = 0.25 * (y + lam)
        z = 0.25 * (z + lam)
        mu = (x + y + z) / 3.0
        dev = np.max(np.abs(np.stack([1 - x / mu, 1 - y / mu, 1 - z / mu])))
        if dev < (rtol * 3.0) ** (1.0 / 6.0):
            break
    X = 1.0 - x / mu
    Y = 1.0 - y / mu
    Z = -(X + Y)
    e2 = X * Y - Z * Z
    e3 = X * Y * Z
    val = (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 - 3.0 * e2 * e3 / 44.0) / np.sqrt(mu)
    if val.ndim == 0:
        return complex(val)
    return val


def incomplete_elliptic_F(phi, m):
    """F(φ|m) for real amplitude ``|φ| <= π/2`` and real ``m`` with ``m sin²φ <= 1``."""
    phi = np.asarray(phi, dtype=float)
    s = np.sin(phi)
    c = np.cos(phi)
    val = s * np.real(carlson_rf(c * c, 1.0 - m * s * s, 1.0))
    if val.ndim == 0:
        return float(val)
    return val


def inverse_cn(x, m):
    """Real ``u`` in ``[0, K(m)]`` with ``cn(u|m) = x``, for ``0 <= x <= 1``, ``m <= 1``."""
    x = np.clip(x, -1.0, 1.0)
    return incomplete_elliptic_F(np.arccos(x), m)


def inverse_dn(x, m):
    """Real ``u`` in ``[0, K(m)]`` with ``dn(u|m) = x``, for ``sqrt(1-m) <= x <= 1``, ``0 < m <= 1``."""
    arg = np.sqrt(np.clip((1.0 - x * x) / m, 0.0, 1.0))
    return incomplete_elliptic_F(np.arcsin(arg), m)
