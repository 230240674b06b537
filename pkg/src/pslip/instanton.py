"""Activation paths p_inst(I) on the K0 = 0 level set and their actions.

Action integrals are done in the native coordinate y of the well tables,
``∫ p dI = ∫ p(y) (dI/dy) dy``, with tanh-sinh quadrature on segments whose
endpoints carry the singular behaviour (well bottom, I_D, I_F, separatrix).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .action_angle import Y_MAX, WellGeometry
from .errors import BracketError, DomainError, StripExitError, ValidationError
from .keldysh import EffectiveHamiltonian

__all__ = [
    "InstantonPath",
    "path_grid",
    "p_star_classical",
    "p_star_quantum",
    "classical_instanton",
    "quantum_T0_instanton",
    "quantum_Tto0_instanton",
    "quantum_finiteT_instanton",
    "fragility_action",
    "action_integral",
    "phase_portrait",
    "N_PATH",
]

N_PATH = 400
# keep quadrature nodes off the points where m = 0 exactly
_Y_EPS = 1e-12
_RTOL = 1e-12


@dataclass(frozen=True)
class InstantonPath:
    """Sampled activation path and its action (iS_inst, dimensionless, <= 0)."""

    regime: str
    geometry: WellGeometry
    I: np.ndarray
    p: np.ndarray
    action: float
    R: float
    p_star: float
    I_F: float | None = None
    singular_I: float | None = None
    residual: np.ndarray = field(default=None, repr=False)
    n_B: float | None = None

    def p_at(self, I):
        """p_inst at arbitrary actions, evaluated from the defining relation."""
        return _p_of_I(self, np.asarray(I, dtype=float))

    def p_at_y(self, y):
        """(p_inst, point data) at native well coordinates y."""
        return _p_of_y(self, y)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["I", "p", "K0_residual"])
        res = self.residual if self.residual is not None else np.zeros_like(self.I)
        for a, b, c in zip(self.I, self.p, res):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(c))])
        return buf.getvalue()


def path_grid(geometry: WellGeometry, n=N_PATH):
    """Cosine-clustered actions on [0, I_top], both endpoints included."""
    k = np.arange(n)
    return 0.5 * geometry.I_top * (1.0 - np.cos(np.pi * k / (n - 1)))


def p_star_classical(geometry: WellGeometry, T):
    se = geometry.special
    return geometry.params.omega_p / T * se.omega_min / se.omega_bar


def p_star_quantum(geometry: WellGeometry, n_B=None):
    """Fixed point log(W_1/W_-1) at the bottom of the well."""
    pr = geometry.params
    nb = pr.occupation if n_B is None else n_B
    gl = 2 * (nb + 1) * pr.kappa
    gg = 2 * nb * pr.kappa
    se = geometry.special
    num = se.omega_bar * (gl + gg) + se.omega_min * (gl - gg)
    den = se.omega_bar * (gl + gg) - se.omega_min * (gl - gg)
    if den <= 0:
        return math.inf
    return math.log(num / den)


# ---------------------------------------------------------------- p(y) rules
def _p_T0_y(geometry, y):
    pt = geometry.point_y(y, with_I=False)
    return 2 * pt.omega * np.abs(pt.tQ.imag), pt


def _p_lt_y(geometry, y):
    pt = geometry.point_y(y, with_I=False)
    return pt.p_lt, pt


def _solve_finiteT(H: EffectiveHamiltonian, pt):
    """Nonzero root of K0(I, ·) in (0, min(p_<, p_>)) for every point.

    K0 is convex in p with K0(0) = 0 and ∂_pK0(0) = -2κI < 0, and for any
    γ_g > 0 it diverges to +inf at the strip edge, so the nonzero root is
    unique. Newton iterates started to the right of a convex function's root
    decrease monotonically onto it; a bisection guard keeps the bracket.
    """
    edge = np.minimum(pt.p_lt, pt.p_gt)
    hi = np.empty_like(edge)
    ok = np.zeros(edge.shape, dtype=bool)
    for margin in (1e-3, 1e-5, 1e-7, 1e-9, 1e-12):
        trial = edge * (1 - margin)
        val = H.series_at(pt, trial, k=0, margin=0.0)
        good = (val > 0) & ~ok
        hi[good] = trial[good]
        ok |= val > 0
        if np.all(ok):
            break
    if not np.all(ok):
        raise BracketError("K0 has no sign change inside the strip; the root left the strip")
    lo = np.full_like(edge, 1e-10)
    p = hi.copy()
    for _ in range(200):
        f = H.series_at(pt, p, k=0, margin=0.0)
        d = -H.series_at(pt, p, k=1, margin=0.0)
        lo = np.where(f < 0, p, lo)
        hi = np.where(f > 0, p, hi)
        pn = p - f / d
        bad = ~np.isfinite(pn) | (pn <= lo) | (pn >= hi)
        pn = np.where(bad, 0.5 * (lo + hi), pn)
        done = np.abs(pn - p) <= 1e-14 * np.abs(p)
        p = pn
        if np.all(done):
            break
    if np.any(p >= edge) or np.any(p <= 0):
        raise StripExitError("finite-temperature root left the convergence strip", bound="upper")
    return p


def _p_finiteT_y(H, y):
    pt = H.geometry.point_y(y, with_I=False)
    return _solve_finiteT(H, pt), pt


def _p_classical_y(geometry, T, y):
    from .action_angle import weighted_sums

    pt = geometry.point_y(y, with_I=True)
    G = weighted_sums(pt, np.zeros_like(pt.y), k=2)
    return geometry.params.omega_p / T * pt.I / G, pt


# ---------------------------------------------------------------- quadrature
def _segments(geometry, breaks):
    pts = sorted({0.0, Y_MAX, *[b for b in breaks if b is not None and 0 < b < Y_MAX]})
    return list(zip(pts[:-1], pts[1:]))


def _integrate_y(geometry, p_of_y, breaks=()):
    """∫ p dĨ over the whole well in scaled units, segmenting at ``breaks``."""
    total = 0.0
    err = 0.0

    def f(y):
        shape = np.shape(y)
        yy = np.asarray(y, dtype=float).ravel()
        for b in breaks:
            if b is not None:
                near = np.abs(yy - b) < _Y_EPS
                yy = np.where(near, b + np.where(yy < b, -_Y_EPS, _Y_EPS), yy)
        yy = np.maximum(yy, _Y_EPS)
        p, _ = p_of_y(yy)
        return (p * geometry.dI_dy_scaled(yy)).reshape(shape)

    for a, b in _segments(geometry, breaks):
        res = integrate.tanhsinh(f, a, b, rtol=_RTOL, atol=1e-300, maxlevel=12)
        total += float(res.integral)
        err += float(res.error)
    return total, err


def _p_of_y(path: InstantonPath, y):
    """p_inst and the point data at native coordinates ``0 < y < Y_MAX``."""
    g = path.geometry
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if path.regime == "classical":
        return _p_classical_y(g, g.params.temperature, y)
    if path.regime == "quantum_T0":
        return _p_T0_y(g, y)
    if path.regime == "quantum_Tto0":
        p0, pt = _p_T0_y(g, y)
        if path.I_F is None or path.I_F >= g.I_top:
            return p0, pt
        yF = float(g.y_of_I(path.I_F))
        return np.where(y < yF, p0, pt.p_lt), pt
    return _p_finiteT_y(EffectiveHamiltonian(g, "quantum"), y)


def _p_of_I(path: InstantonPath, I):
    g = path.geometry
    I = np.atleast_1d(I)
    out = np.zeros_like(I)
    inner = (I > 0) & (I < g.I_top)
    out[I <= 0] = path.p_star
    if np.any(inner):
        out[inner], _ = _p_of_y(path, g.y_of_I(I[inner]))
    return out


def _sample(geometry, p_of_y, p0, singular=None, n=N_PATH):
    I = path_grid(geometry, n)
    if singular is not None:
        # nudge a grid node sitting on the singular action
        hit = np.abs(I - singular) < 1e-12 * geometry.I_top
        I = np.where(hit, singular * (1 - 1e-9), I)
    p = np.empty_like(I)
    p[0] = p0
    p[-1] = 0.0
    y = geometry.y_of_I(I[1:-1])
    p[1:-1], _ = p_of_y(y)
    return I, p


def _residual(H, I, p):
    """K0 along the path relative to the scale of its p² term."""
    res = np.zeros_like(I)
    inner = (I > 0) & (I < H.geometry.I_top) & np.isfinite(p)
    if not np.any(inner):
        return res
    Ii = I[inner]
    pi = p[inner]
    if H.mode == "classical":
        from .action_angle import noise_kernel

        k = H.K0(Ii, pi)
        scale = H.noise_strength * noise_kernel(Ii, H.geometry) * pi**2
    else:
        pt = H.geometry.point(Ii)
        k = H.series_at(pt, pi, k=0, margin=0.0)
        scale = np.abs(H.series_at(pt, pi, k=2, margin=0.0)) * pi**2
    res[inner] = np.abs(k) / np.where(scale > 0, scale, 1.0)
    return res


# ---------------------------------------------------------------- public paths
def classical_instanton(geometry: WellGeometry, T=None, n=N_PATH) -> InstantonPath:
    """p_inst = (ω_p/T) I/Γ(I); iS = -(ω_p λ / T g) R."""
    pr = geometry.params
    if T is None:
        T = pr.temperature
    if not T > 0:
        raise ValidationError("classical instanton needs T > 0", field="T")
    if pr.temperature != T:
        geometry = WellGeometry(pr.with_(T=T), geometry.n_max)
        pr = geometry.params

    def rule(y):
        return _p_classical_y(geometry, T, y)

    # scaled R uses ω_p/T = 1
    def rule_R(y):
        return _p_classical_y(geometry, pr.omega_p, y)

    R, _ = _integrate_y(geometry, rule_R)
    p0 = p_star_classical(geometry, T)
    I, p = _sample(geometry, rule, p0, n=n)
    H = EffectiveHamiltonian(geometry, "classical")
    action = -pr.omega_p * pr.lam / (T * pr.g) * R
    return InstantonPath("classical", geometry, I, p, action, R, p0, residual=_residual(H, I, p))


def quantum_T0_instanton(geometry: WellGeometry, n=N_PATH) -> InstantonPath:
    """p_inst = 2ω|t_Q|; iS = -(λ/g) R^{T=0}. Log-divergent but integrable at I_D."""
    pr = geometry.params
    if pr.occupation != 0:
        geometry = WellGeometry(pr.with_(n_B=0.0), geometry.n_max)
        pr = geometry.params

    def rule(y):
        return _p_T0_y(geometry, y)

    R, _ = _integrate_y(geometry, rule, breaks=(geometry.y_D,))
    p0 = p_star_quantum(geometry, 0.0)
    I, p = _sample(geometry, rule, p0, singular=geometry.I_D, n=n)
    H = EffectiveHamiltonian(geometry, "quantum")
    return InstantonPath(
        "quantum_T0", geometry, I, p, -pr.lam / pr.g * R, R, p0,
        singular_I=geometry.I_D, residual=_residual(H, I, p), n_B=0.0,
    )


def fragility_action(geometry: WellGeometry, n_scan=400):
    """(I_F, y_F) where the T=0 path first meets p_<.

    Without a crossing returns ``(I_top, None)``; when the T=0 path starts
    above p_< already returns ``(0.0, 0.0)``.
    """
    ys = np.concatenate([np.geomspace(1e-9, 1e-2, 60), np.linspace(1e-2, 30.0, n_scan)[1:]])
    if geometry.y_D is not None:
        ys = ys[np.abs(ys - geometry.y_D) > 1e-9]

    def f(y):
        pt = geometry.point_y(np.atleast_1d(y), with_I=False)
        return pt.p_lt - 2 * pt.omega * np.abs(pt.tQ.imag)

    fv = f(ys)
    neg = np.flatnonzero(fv < 0)
    if len(neg) == 0:
        return geometry.I_top, None
    k = neg[0]
    if k == 0:
        return 0.0, 0.0
    yF = optimize.brentq(lambda y: float(f(y)[0]), ys[k - 1], ys[k], xtol=1e-15, rtol=1e-15)
    I_F = float(geometry.point_y(np.array([yF])).I[0] * geometry.params.action_unit)
    return I_F, yF


def quantum_Tto0_instanton(geometry: WellGeometry, n=N_PATH) -> InstantonPath:
    """T=0 path below I_F, p_< above it."""
    pr = geometry.params
    if pr.occupation != 0:
        geometry = WellGeometry(pr.with_(n_B=0.0), geometry.n_max)
        pr = geometry.params
    I_F, yF = fragility_action(geometry)
    if yF is None:
        base = quantum_T0_instanton(geometry, n=n)
        return InstantonPath(
            "quantum_Tto0", geometry, base.I, base.p, base.action, base.R, base.p_star,
            I_F=geometry.I_top, singular_I=base.singular_I, residual=base.residual, n_B=0.0,
        )

    def rule(y):
        p0, pt = _p_T0_y(geometry, y)
        return np.where(y < yF, p0, pt.p_lt), pt

    R, _ = _integrate_y(geometry, rule, breaks=(yF,))
    p0 = p_star_quantum(geometry, 0.0)
    I, p = _sample(geometry, rule, p0, n=n)
    H = EffectiveHamiltonian(geometry, "quantum")
    res = _residual(H, I, np.where(I < I_F, p, np.nan))
    return InstantonPath(
        "quantum_Tto0", geometry, I, p, -pr.lam / pr.g * R, R, p0, I_F=I_F, residual=res, n_B=0.0,
    )


def quantum_finiteT_instanton(geometry: WellGeometry, n_B=None, n=N_PATH) -> InstantonPath:
    """Root of K0(I, p) = 0 inside the symmetric strip, for n_B > 0."""
    pr = geometry.params
    nb = pr.occupation if n_B is None else n_B
    if not nb > 0:
        raise ValidationError("finite-temperature instanton needs n_B > 0", field="n_B")
    if pr.occupation != nb:
        geometry = WellGeometry(pr.with_(n_B=nb), geometry.n_max)
        pr = geometry.params
    H = EffectiveHamiltonian(geometry, "quantum")

    def rule(y):
        return _p_finiteT_y(H, y)

    # at low n_B the path turns sharply near the zero-temperature fragility point
    _, yF = fragility_action(WellGeometry(pr.with_(n_B=0.0), geometry.n_max))
    R, _ = _integrate_y(geometry, rule, breaks=(yF or None,))
    p0 = p_star_quantum(geometry, nb)
    I, p = _sample(geometry, rule, p0, n=n)
    return InstantonPath(
        "quantum_finiteT", geometry, I, p, -pr.lam / pr.g * R, R, p0,
        residual=_residual(H, I, p), n_B=nb,
    )


def action_integral(path: InstantonPath, method="native"):
    """iS_inst = -∫ p dI.

    ``native`` returns the value computed in the scaled y coordinate at
    construction. ``action`` integrates the dimensional p(I) with adaptive
    Gauss-Kronrod in I as an independent route.
    """
    if method == "native":
        return path.action
    if method != "action":
        raise ValueError("method must be 'native' or 'action'")
    g = path.geometry
    pts = [x for x in (path.I_F, path.singular_I) if x is not None and 0 < x < g.I_top]

    def f(I):
        return float(path.p_at(np.array([I]))[0])

    val, _ = integrate.quad(f, 0.0, g.I_top, points=pts or None, limit=400, epsabs=0, epsrel=1e-11)
    return -val


def phase_portrait(geometry: WellGeometry, mode="quantum", n_B=None, grid=(64, 64), p_max=None):
    """K0 over an (I, p) grid plus invariant lines and fixed points.

    Quantum values outside the convergence strip are NaN.
    """
    nI, nP = grid
    if nI < 64 or nP < 64:
        raise ValidationError("portrait grid must be at least 64x64", field="grid")
    pr = geometry.params
    if mode == "quantum" and n_B is not None and pr.occupation != n_B:
        geometry = WellGeometry(pr.with_(n_B=n_B), geometry.n_max)
        pr = geometry.params
    H = EffectiveHamiltonian(geometry, mode)
    Is = np.linspace(0, geometry.I_top, nI + 2)[1:-1]
    lines = {"p=0": (Is, np.zeros_like(Is)), "I=0": None}
    if mode == "classical":
        path = classical_instanton(geometry)
        p_star = path.p_star
    elif pr.occupation == 0:
        path = quantum_Tto0_instanton(geometry)
        p_star = path.p_star
        t0 = quantum_T0_instanton(geometry)
        lines["T=0"] = (t0.I, t0.p)
    else:
        path = quantum_finiteT_instanton(geometry)
        p_star = path.p_star
    if p_max is None:
        p_max = 1.25 * (p_star if math.isfinite(p_star) else np.nanmax(path.p[np.isfinite(path.p)]))
    ps = np.linspace(-0.25 * p_max, p_max, nP)
    lines["I=0"] = (np.zeros_like(ps), ps)
    lines["instanton"] = (path.I, path.p)
    K = np.full((nI, nP), np.nan)
    pt = geometry.point(Is)
    if mode == "quantum":
        lines["p_lt"] = (Is, pt.p_lt)
        lines["tunnel"] = (Is, pt.omega * pt.t2.imag)
    for j, pv in enumerate(ps):
        pvec = np.full_like(Is, pv)
        if mode == "classical":
            K[:, j] = H.K0(Is, pvec)
        else:
            lo, hi = (-pt.p_lt, pt.p_gt) if H.zero_T else (-np.minimum(pt.p_lt, pt.p_gt), np.minimum(pt.p_lt, pt.p_gt))
            inside = (pvec > lo * (1 - 1e-3)) & (pvec < hi * (1 - 1e-3))
            if np.any(inside):
                sub = geometry.point(Is[inside])
                K[inside, j] = H.series_at(sub, pvec[inside], k=0, margin=0.0)
    fixed = [(0.0, 0.0), (0.0, p_star), (geometry.I_top, 0.0)]
    markers = {}
    if mode == "quantum" and pr.occupation == 0 and geometry.I_D is not None:
        markers["divergence_I_D"] = geometry.I_D
    if mode == "quantum" and pr.occupation == 0 and path.I_F is not None:
        markers["I_F"] = path.I_F
    return dict(I=Is, p=ps, K0=K, lines=lines, fixed_points=fixed, markers=markers, path=path)
