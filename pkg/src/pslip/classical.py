"""Closed-form intrawell motion of the rotating-frame Hamiltonian.

All times, energies and coordinates here are dimensional. The Jacobi
argument is ``sqrt(8 λ s) t`` with ``s = sqrt(g |E|)`` and the parameter is
``m = (Δ² - (s - 2λ)²) / (8 λ s)``, which is real and below one for every
intrawell energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .elliptic import (
    POLE_THRESHOLD,
    agm,
    carlson_rf,
    complete_elliptic_K,
    jacobi_pq,
)
from .errors import DivergenceError, DomainError, PoleError
from .params import OscParams

__all__ = [
    "SpecialEnergies",
    "special_energies",
    "cosh_sinh_beta",
    "H0",
    "CharTimes",
    "char_times",
    "times_from_s",
    "classical_solution",
]


class SpecialEnergies(NamedTuple):
    E_min: float
    E_D: float
    omega_min: float
    omega_bar: float
    beta: float


def special_energies(params: OscParams) -> SpecialEnergies:
    lam, d, g = params.lam, params.delta, params.g
    E_min = -((2 * lam - d) ** 2) / g
    E_D = -((2 * lam + d) ** 2) / g
    w_min = 2.0 * math.sqrt(2 * lam * (2 * lam - d))
    w_bar = 4 * lam - d
    beta = 0.5 * math.atanh(d / w_bar)
    return SpecialEnergies(E_min, E_D, w_min, w_bar, beta)


def cosh_sinh_beta(params: OscParams):
    """cosh β and sinh β from their algebraic closed forms."""
    se = special_energies(params)
    w, wb = se.omega_min, se.omega_bar
    ch = math.sqrt((wb + w) / (2 * w))
    sh = params.delta / (math.sqrt(2 * w) * math.sqrt(wb + w))
    return ch, sh


def H0(phi_bar, phi, params: OscParams):
    """Rotating-frame Hamiltonian; pass ``conj(phi)`` for the physical value."""
    n = phi_bar * phi
    return params.delta * n + params.lam * (phi * phi + phi_bar * phi_bar) + 0.25 * params.g * n * n


@dataclass(frozen=True)
class CharTimes:
    t1: float
    t2: complex
    tS: complex
    tP: complex
    tQ: complex


def _m_of_s(s, A, d):
    m = (d * d - (s - A) ** 2) / (4 * A * s)
    mc = ((s + A) ** 2 - d * d) / (4 * A * s)
    return m, mc


def times_from_s(s, lam, delta, gap=None):
    """Characteristic times as arrays over ``s = sqrt(g|E|)``.

    Returns ``(t1, t2, tS, tP, tQ, m)``. Vectorised helper behind
    :func:`char_times`; no domain checks beyond the elliptic ones.
    ``gap`` is ``2λ - Δ - s`` when the caller knows it more accurately than
    the difference does (near the bottom of the well everything that
    vanishes there is built from it).
    """
    s = np.asarray(s, dtype=float)
    A = 2.0 * lam
    gap = (A - delta - s) if gap is None else np.asarray(gap, dtype=float)
    gap = np.maximum(gap, 0.0)
    # m = -(gap)(A + Δ - s)/(4As), factored so it keeps full precision at small gap
    m = -gap * (A + delta - s) / (4 * A * s)
    mc = (s + A - delta) * (s + A + delta) / (4 * A * s)
    if np.any(m == 0.0):
        raise DivergenceError("t2 diverges where m = 0 (E = E_min or E = E_D)")
    K = np.asarray(complete_elliptic_K(m), dtype=float)
    # K(1 - m) on the -i0 side of the cut: AGM with k' = sqrt(m) taken on that side
    kc = np.where(m < 0, 1j * np.sqrt(np.abs(m)), np.sqrt(np.abs(m)) + 0j)
    Kc = np.pi / (2.0 * agm(1.0, kc))
    root = np.sqrt(2 * lam * s)
    t1 = 2.0 * K / root
    t2 = 2j * Kc / root
    tS = (1j * Kc + K) / root
    # incomplete integral through R_F with its arguments in closed form
    y = np.empty_like(s)
    neg = m < 0
    if np.any(neg):
        sq = s[neg] + A + delta
        g_ = gap[neg]
        sin_phi = np.sqrt(sq / (2 * A))
        rf = carlson_rf(g_ / (2 * A), g_ / (s[neg] + A - delta), 1.0)
        y[neg] = sin_phi * np.real(rf) / np.sqrt(mc[neg])
    pos = ~neg
    if np.any(pos):
        g_ = gap[pos]
        den = A - delta + s[pos]
        sin_phi = np.sqrt(2 * s[pos] / den)
        rf = carlson_rf(g_ / den, g_ / (2 * A), 1.0 + 0.0 * g_)
        y[pos] = sin_phi * np.real(rf)
    tP = (2.0 * K + 1j * y) / np.sqrt(8 * lam * s)
    tQ = 1j * (0.5 * t2.imag - 2.0 * tP.imag)
    return t1, t2, tS, tP, tQ, m


def _check_energy(E, params):
    se = special_energies(params)
    if not (se.E_min <= E < 0):
        raise DomainError(f"E={E} outside the intrawell range [{se.E_min}, 0)")
    return se


def char_times(E: float, params: OscParams) -> CharTimes:
    """Periods t1, t2, the symmetry shift tS, the pole tP and quasi-period tQ.

    At E = E_min only t1 has a finite limit; the other times are returned as
    ``i·inf``. For Δ < 0 at E = E_D the second period diverges and
    :class:`DivergenceError` is raised.
    """
    se = _check_energy(E, params)
    s = math.sqrt(params.g * abs(E))
    if E == se.E_min:
        inf = complex(0.0, math.inf)
        return CharTimes(2 * math.pi / se.omega_min, inf, inf, complex(0.5 * 2 * math.pi / se.omega_min, math.inf), inf)
    if params.delta < 0 and E == se.E_D:
        raise DivergenceError("|t2| diverges at E = E_D")
    t1, t2, tS, tP, tQ, _ = times_from_s(np.array([s]), params.lam, params.delta)
    return CharTimes(float(t1[0]), complex(t2[0]), complex(tS[0]), complex(tP[0]), complex(tQ[0]))


def classical_solution(t, E: float, params: OscParams):
    """Intrawell trajectory φ(t; E) of the well around ``i sqrt(2(2λ-Δ)/g)``.

    ``t`` may be complex and an array. Raises :class:`PoleError` near the
    poles of the solution (tP modulo the period lattice).
    """
    se = _check_energy(E, params)
    lam, d, g = params.lam, params.delta, params.g
    scalar = np.isscalar(t)
    t = np.asarray(t, dtype=complex)
    if E == se.E_min:
        out = np.full(t.shape, 1j * math.sqrt(2 * (2 * lam - d) / g))
        return complex(out.item()) if scalar else out
    s = math.sqrt(g * abs(E))
    A = 2 * lam
    m, _ = _m_of_s(s, A, d)
    kp = math.sqrt(A - d + s)
    km = math.sqrt(max(A - d - s, 0.0))
    sn, cn, dn = jacobi_pq(math.sqrt(8 * lam * s) * t, m)
    den = kp + km * cn
    near = np.abs(den) < POLE_THRESHOLD * kp
    if np.any(near):
        idx = int(np.flatnonzero(np.atleast_1d(near))[0])
        raise PoleError("trajectory evaluated at a pole", pole=complex(np.atleast_1d(t)[idx]))
    q = abs(g * E) ** 0.25
    out = abs(E / g) ** 0.25 / den * (2j * q * dn - kp * km / math.sqrt(2 * lam) * sn)
    if scalar:
        return complex(out)
    return out
