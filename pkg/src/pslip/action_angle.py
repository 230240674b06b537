"""Action-angle geometry of one well.

Everything is computed for the scaled model (λ = g = 1/2, Δ → Δ/2λ) and
converted at the boundary, so one table serves every parameter set with the
same Δ/2λ. The native coordinate is ``y = log(s_min / s)`` with
``s = sqrt(g|E|)``: the action integrand ``dI/dy`` is smooth in y on
``[0, inf)`` and decays like ``y exp(-3y/2)`` towards the separatrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import ellipe

from .classical import special_energies, times_from_s
from .elliptic import complete_elliptic_K
from .errors import DomainError, TruncationError
from .params import OscParams

__all__ = [
    "WellGeometry",
    "FourierTable",
    "well_geometry",
    "action_of_energy",
    "omega_of_action",
    "fourier_coeffs",
    "noise_kernel",
    "convergence_radii",
]

Y_MAX = 40.0
_PANEL = 0.25
_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
SUM_RULE_TOL = 1e-6
N_MAX_CAP = 1 << 14
# exp(-n ω Im tS) below this is dropped against one
_TAIL_EXP = 40.0


def _dK_dm(m, K):
    m = np.asarray(m, dtype=float)
    out = np.empty_like(m)
    small = np.abs(m) < 1e-3
    ms = m[small]
    out[small] = 0.5 * np.pi * (0.25 + 9.0 / 32.0 * ms + 75.0 / 256.0 * ms**2 + 1225.0 / 4096.0 * ms**3)
    mb = m[~small]
    out[~small] = (ellipe(mb) - (1.0 - mb) * K[~small]) / (2.0 * mb * (1.0 - mb))
    return out


class _ScaledWell:
    """Tables for the scaled problem at fixed r = Δ/2λ."""

    def __init__(self, r: float):
        self.r = r
        self.s_min = 1.0 - r
        edges = [0.0, Y_MAX]
        self.y_D = None
        if r < 0:
            self.y_D = math.log((1.0 - r) / (1.0 + r))
            edges.insert(1, self.y_D)
        pts = [0.0]
        for a, b in zip(edges[:-1], edges[1:]):
            n = max(1, int(math.ceil((b - a) / _PANEL)))
            pts.extend(np.linspace(a, b, n + 1)[1:])
        self.y_edges = np.array(pts)
        a = self.y_edges[:-1, None]
        b = self.y_edges[1:, None]
        yy = 0.5 * (b - a) * _GL_X[None, :] + 0.5 * (a + b)
        vals = self.dI_dy(yy.ravel()).reshape(yy.shape)
        panel = 0.5 * (b[:, 0] - a[:, 0]) * (vals @ _GL_W)
        self.I_edges = np.concatenate([[0.0], np.cumsum(panel)])
        self.I_top = float(self.I_edges[-1])
        self.I_D = None if self.y_D is None else float(self.I_of_y(np.array([self.y_D]))[0])

    # --- energy/action coordinate maps
    def s_of_y(self, y):
        return self.s_min * np.exp(-np.asarray(y, dtype=float))

    def m_of_s(self, s):
        r = self.r
        return (r * r - (s - 1.0) ** 2) / (4.0 * s)

    def dI_dy(self, y):
        s = self.s_of_y(y)
        K = np.asarray(complete_elliptic_K(self.m_of_s(s)), dtype=float)
        return 4.0 * K * s**1.5 / np.pi

    def I_of_y(self, y):
        shape = np.shape(y)
        y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
        k = np.clip(np.searchsorted(self.y_edges, y, side="right") - 1, 0, len(self.y_edges) - 2)
        a = self.y_edges[k]
        nodes = 0.5 * (y - a)[:, None] * (_GL_X[None, :] + 1.0) + a[:, None]
        vals = self.dI_dy(nodes.ravel()).reshape(nodes.shape)
        return (self.I_edges[k] + 0.5 * (y - a) * (vals @ _GL_W)).reshape(shape)

    def y_of_I(self, I):
        shape = np.shape(I)
        I = np.atleast_1d(np.asarray(I, dtype=float)).ravel()
        if np.any(I < 0) or np.any(I >= self.I_top):
            raise DomainError(f"action outside [0, I_top={self.I_top})")
        k = np.clip(np.searchsorted(self.I_edges, I, side="right") - 1, 0, len(self.I_edges) - 2)
        lo = self.y_edges[k].copy()
        hi = self.y_edges[k + 1].copy()
        Ilo = self.I_edges[k]
        Ihi = self.I_edges[k + 1]
        frac = np.where(Ihi > Ilo, (I - Ilo) / np.where(Ihi > Ilo, Ihi - Ilo, 1.0), 0.0)
        y = lo + frac * (hi - lo)
        for _ in range(60):
            f = self.I_of_y(y) - I
            lo = np.where(f < 0, y, lo)
            hi = np.where(f > 0, y, hi)
            step = f / self.dI_dy(y)
            yn = y - step
            bad = (yn <= lo) | (yn >= hi) | ~np.isfinite(yn)
            yn = np.where(bad, 0.5 * (lo + hi), yn)
            done = np.abs(yn - y) <= 1e-15 * np.maximum(1.0, np.abs(y))
            y = yn
            if np.all(done | (I == 0)):
                break
        return np.where(I == 0, 0.0, y).reshape(shape)

    # --- frequency
    def omega_of_y(self, y, derivative=False):
        s = self.s_of_y(y)
        m = self.m_of_s(s)
        K = np.asarray(complete_elliptic_K(m), dtype=float)
        w = np.pi * np.sqrt(s) / K
        if not derivative:
            return w
        dm = (1.0 - self.r**2 - s * s) / (4.0 * s * s)
        dw_ds = np.pi * (K / (2.0 * np.sqrt(s)) - np.sqrt(s) * _dK_dm(m, K) * dm) / K**2
        dw_dE = dw_ds / (-4.0 * s)
        return w, w * dw_dE

    # --- times and Fourier data
    def times(self, y):
        y = np.asarray(y, dtype=float)
        s = self.s_of_y(y)
        gap = -self.s_min * np.expm1(-y)
        t1, t2, tS, tP, tQ, m = times_from_s(s, 0.5, self.r, gap=gap)
        return dict(t1=t1, t2=t2, tS=tS, tP=tP, tQ=tQ, m=m, omega=2 * np.pi / t1)


@lru_cache(maxsize=32)
def _scaled_well(r: float) -> _ScaledWell:
    return _ScaledWell(r)


@dataclass(frozen=True)
class FourierTable:
    """Coefficients c_n for ``n = -n_max..n_max`` at one action."""

    I: float
    n: np.ndarray
    c: np.ndarray
    residual_I: float
    residual_Gamma: float

    def __getitem__(self, n):
        return self.c[int(n) + (len(self.n) - 1) // 2]

    @property
    def n_max(self):
        return int(self.n[-1])


@dataclass(frozen=True)
class _Point:
    """Everything needed about a set of actions, scaled units."""

    I: np.ndarray
    y: np.ndarray
    omega: np.ndarray
    tP: np.ndarray
    tS: np.ndarray
    t2: np.ndarray
    tQ: np.ndarray
    p_lt: np.ndarray
    p_gt: np.ndarray
    _table: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def log_abs2(self):
        """(N, n, log|c̃_n|², mask) up to the tail order, computed once."""
        if "la" not in self._table:
            N = tail_order(self)
            Nmax = int(N.max())
            n = np.arange(-Nmax, Nmax + 1)
            mask = np.abs(n)[None, :] <= N[:, None]
            la = np.where(mask, 2 * log_coeffs(self, n).real, -np.inf)
            self._table["la"] = (N, n, la, mask)
        return self._table["la"]


@dataclass(frozen=True)
class WellGeometry:
    """Immutable action-angle data of one well, dimensional interface."""

    params: OscParams
    n_max: int = 64
    _w: _ScaledWell = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_w", _scaled_well(float(self.params.ratio)))

    # unit factors
    @property
    def _Iu(self):
        return self.params.action_unit

    @property
    def _wu(self):
        return self.params.freq_unit

    @property
    def I_top(self) -> float:
        return self._w.I_top * self._Iu

    @property
    def I_D(self):
        return None if self._w.I_D is None else self._w.I_D * self._Iu

    @property
    def special(self):
        return special_energies(self.params)

    def E_of_I(self, I):
        y = self._w.y_of_I(np.asarray(I, dtype=float) / self._Iu)
        s = self._w.s_of_y(y)
        return _ret(-2.0 * s * s * self.params.energy_unit, I)

    def I_of_E(self, E):
        E = np.asarray(E, dtype=float)
        se = self.special
        if np.any(E < se.E_min) or np.any(E >= 0):
            raise DomainError(f"E outside the intrawell range [{se.E_min}, 0)")
        s = np.sqrt(np.abs(E) / self.params.energy_unit / 2.0)
        y = np.log(self._w.s_min / s)
        y = np.maximum(y, 0.0)
        return _ret(self._w.I_of_y(np.atleast_1d(y)).reshape(y.shape) * self._Iu, E)

    def omega_of_I(self, I, derivative=False):
        I = np.asarray(I, dtype=float)
        if np.any(I < 0) or np.any(I >= self.I_top):
            raise DomainError(f"action outside [0, I_top={self.I_top})")
        y = self._w.y_of_I(np.atleast_1d(I / self._Iu))
        if not derivative:
            return _ret(self._w.omega_of_y(y).reshape(I.shape) * self._wu, I)
        w, dw = self._w.omega_of_y(y, derivative=True)
        # dω/dI = 2λ (g/λ) dω̃/dĨ
        return _ret(w.reshape(I.shape) * self._wu, I), _ret(dw.reshape(I.shape) * 2 * self.params.g, I)

    def omega_of_y(self, y, derivative=False):
        """ω (and ∂ω/∂I) at native coordinates, dimensional."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if not derivative:
            return self._w.omega_of_y(y) * self._wu
        w, dw = self._w.omega_of_y(y, derivative=True)
        return w * self._wu, dw * 2 * self.params.g

    def point(self, I) -> _Point:
        """Scaled-unit data at dimensional actions ``I`` in ``(0, I_top)``."""
        I = np.atleast_1d(np.asarray(I, dtype=float))
        if np.any(I <= 0) or np.any(I >= self.I_top):
            raise DomainError(f"action must lie in (0, I_top={self.I_top})")
        Is = I / self._Iu
        y = self._w.y_of_I(Is)
        d = self._w.times(y)
        w = d["omega"]
        return _Point(
            I=Is, y=y, omega=w, tP=d["tP"], tS=d["tS"], t2=d["t2"], tQ=d["tQ"],
            p_lt=2 * w * d["tP"].imag, p_gt=2 * w * (d["tS"] - d["tP"]).imag,
        )

    def point_y(self, y, with_I=True) -> _Point:
        """Scaled-unit data directly at native coordinates ``y > 0``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        d = self._w.times(y)
        w = d["omega"]
        Is = self._w.I_of_y(y) if with_I else np.full_like(y, np.nan)
        return _Point(
            I=Is, y=y, omega=w, tP=d["tP"], tS=d["tS"], t2=d["t2"], tQ=d["tQ"],
            p_lt=2 * w * d["tP"].imag, p_gt=2 * w * (d["tS"] - d["tP"]).imag,
        )

    def y_of_I(self, I):
        return self._w.y_of_I(np.asarray(I, dtype=float) / self._Iu)

    @property
    def y_D(self):
        return self._w.y_D

    def dI_dy_scaled(self, y):
        return self._w.dI_dy(y)

    def char_times_at(self, I):
        """Characteristic times at action I, dimensional."""
        pt = self.point(I)
        f = 1.0 / self._wu
        return dict(t1=2 * np.pi / pt.omega * f, t2=pt.t2 * f, tS=pt.tS * f, tP=pt.tP * f, tQ=pt.tQ * f)


def _ret(val, like):
    if np.ndim(like) == 0:
        return float(np.asarray(val).ravel()[0])
    return val


def well_geometry(params: OscParams, n_max: int = 64) -> WellGeometry:
    return WellGeometry(params, n_max)


def action_of_energy(E, params: OscParams):
    """Action I(E) = ∫ dE'/ω(E') from the well bottom."""
    return WellGeometry(params).I_of_E(E)


def omega_of_action(I, geometry: WellGeometry, derivative=False):
    """Intrawell frequency ω(I); with ``derivative`` also returns ∂ω/∂I."""
    return geometry.omega_of_I(I, derivative=derivative)


def log_coeffs(pt: _Point, n):
    """log c̃_n (scaled units) for integer array ``n``, shape (len(I), len(n))."""
    n = np.asarray(n)[None, :]
    w = pt.omega[:, None]
    tP = pt.tP[:, None]
    tS = pt.tS[:, None]
    base = np.log(2j * w)
    pos = n >= 0
    nn = np.where(pos, n, 0)
    nneg = np.where(pos, 0, n)
    lp = base + 1j * nn * w * tP - np.log1p(np.exp(1j * nn * w * tS))
    ln = base + 1j * nneg * w * (tP - tS) - np.log1p(np.exp(-1j * nneg * w * tS))
    return np.where(pos, lp, ln)


def tail_order(pt: _Point):
    """Index beyond which |c_n|² is an exact geometric sequence to double precision."""
    rate = 0.5 * (pt.p_lt + pt.p_gt)  # ω Im tS
    return np.ceil(_TAIL_EXP / rate).astype(int) + 1


def fourier_coeffs(I, geometry: WellGeometry, n_max=None, tol=SUM_RULE_TOL) -> FourierTable:
    """Coefficients c_n(I), ``|n| <= n_max``, with sum-rule residuals.

    With ``n_max=None`` the geometry default is doubled until both sum-rule
    residuals are below ``tol``. An explicit ``n_max`` that misses the
    tolerance raises :class:`TruncationError`.
    """
    I = float(I)
    pt = geometry.point(I)
    adaptive = n_max is None
    nm = int(geometry.n_max if adaptive else n_max)
    if nm < 1:
        raise DomainError("n_max must be positive")
    G_full = _gamma_scaled(pt)[0]
    while True:
        n = np.arange(-nm, nm + 1)
        c = np.exp(log_coeffs(pt, n))[0]
        a2 = np.abs(c) ** 2
        rI = abs(np.sum(n * a2) - pt.I[0]) / pt.I[0]
        rG = abs(np.sum(n * n * a2) - G_full) / G_full
        if (rI < tol and rG < tol) or not adaptive or nm >= N_MAX_CAP:
            break
        nm *= 2
    if rI >= tol or rG >= tol:
        raise TruncationError(
            f"sum-rule residuals ({rI:.2e}, {rG:.2e}) above {tol:g} at n_max={nm}; increase n_max",
            residual=max(rI, rG), n_max=nm,
        )
    scale = math.sqrt(geometry.params.action_unit)
    return FourierTable(I=I, n=n, c=c * scale, residual_I=float(rI), residual_Gamma=float(rG))


def _geom_tail(a, M, k):
    """Σ_{n>=M} n^k e^{-a n} for k in 0, 1, 2."""
    q = np.exp(-a)
    omq = -np.expm1(-a)
    G0 = 1.0 / omq
    G1 = q / omq**2
    G2 = q * (1 + q) / omq**3
    qM = np.exp(-a * M)
    # Σ_{n>=M} n^k q^n = q^M Σ_j (M + j)^k q^j
    if k == 0:
        return qM * G0
    if k == 1:
        return qM * (M * G0 + G1)
    return qM * (M * M * G0 + 2 * M * G1 + G2)


def _gamma_scaled(pt: _Point):
    """Γ̃ = Σ n²|c̃_n|² with exact geometric tails."""
    return weighted_sums(pt, np.zeros_like(pt.I), k=2)


def weighted_sums(pt: _Point, p, k=0, subtract_one=False):
    """Σ_n n^k |c̃_n|² e^{-n p} (or times ``e^{-np} - 1`` with ``subtract_one``).

    ``p`` is an array matching the actions, and must satisfy
    ``-p_gt < p < p_lt`` pointwise for convergence. Explicit terms run to
    the tail order; beyond it |c̃_n|² is exactly ``|C|² e^{-n p_<}`` (n > 0)
    or ``|C|² e^{-|n| p_>}`` (n < 0) in double precision.
    """
    p = np.asarray(p, dtype=float)
    N, n, la, mask = pt.log_abs2()
    terms = np.exp(la - n[None, :] * p[:, None])
    if subtract_one:
        terms = terms - np.exp(la)
    nk = n[None, :].astype(float) ** k
    total = np.sum(nk * terms, axis=1)
    # tails, |C|² = (2ω)²
    C2 = (2 * pt.omega) ** 2
    M = N + 1.0
    a_pos = pt.p_lt + p
    a_neg = pt.p_gt - p
    sgn = (-1.0) ** k
    tail = C2 * (_geom_tail(a_pos, M, k) + sgn * _geom_tail(a_neg, M, k))
    if subtract_one:
        tail = tail - C2 * (_geom_tail(pt.p_lt, M, k) + sgn * _geom_tail(pt.p_gt, M, k))
    return total + tail


def noise_kernel(I, geometry: WellGeometry):
    """Γ(I) = Σ n²|c_n|²; zero at the well bottom."""
    Ia = np.atleast_1d(np.asarray(I, dtype=float))
    out = np.zeros_like(Ia)
    nz = Ia > 0
    if np.any(nz):
        pt = geometry.point(Ia[nz])
        out[nz] = _gamma_scaled(pt) * geometry.params.action_unit
    return _ret(out, I)


def convergence_radii(I, geometry: WellGeometry):
    """(p_<, p_>): decay rates of |c_n|² for n → +inf and n → -inf."""
    pt = geometry.point(I)
    if np.ndim(I) == 0:
        return float(pt.p_lt[0]), float(pt.p_gt[0])
    return pt.p_lt, pt.p_gt
