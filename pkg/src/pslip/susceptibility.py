"""Logarithmic susceptibility harmonics and the exponent correction.

Each harmonic χ_n(ν) is the steepest-descent value of a time integral along
the instanton, with the saddle at nω(I) = ν. Outside the band, where no such
action exists, the harmonic is reported as a tagged zero ("background").
"""
from __future__ import annotations

import io
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .action_angle import Y_MAX, WellGeometry, log_coeffs, weighted_sums
from .classical import cosh_sinh_beta
from .errors import DomainError, ValidationError, ValidityWarning
from .instanton import InstantonPath
from .keldysh import EffectiveHamiltonian
from .params import DriveParams

__all__ = [
    "ChiValue",
    "SADDLE",
    "BACKGROUND",
    "saddle_action",
    "chi_n",
    "chi_n_classical",
    "chi_n_quantum",
    "omega_I",
    "peak_prefactor",
    "resonance_asymptotics",
    "linear_coefficient",
    "dominant_harmonic",
    "LSSpectrum",
    "compute_spectrum",
    "ExponentCorrection",
    "exponent_correction",
    "crossover_temperature",
]

SADDLE = "saddle"
BACKGROUND = "background"
PERTURBATIVE_LIMIT = 0.3
_BISECT_STEPS = 64
# keep saddle points off y_D where the second period is infinite
_Y_EPS = 1e-12


class ChiValue(NamedTuple):
    """|χ_n(ν)| with the saddle action; tag is ``saddle`` or ``background``."""

    value: float
    I: float
    tag: str


# ---------------------------------------------------------------- saddle
def _saddle_y(geometry: WellGeometry, n, nu):
    """Native coordinate of nω(I) = ν by bisection, NaN where unsolvable.

    ω decreases monotonically in y, so plain bisection on [0, Y_MAX] lands
    on the unique root; 64 halvings take the bracket below 1e-17.
    """
    n = np.asarray(n, dtype=float)
    nu = np.asarray(nu, dtype=float)
    n, nu = np.broadcast_arrays(n, nu)
    target = np.where(n != 0, nu / np.where(n != 0, n, 1.0), -1.0)
    w_min = geometry.special.omega_min
    w_end = float(geometry.omega_of_y(Y_MAX)[0])
    ok = (n != 0) & (target > w_end) & (target < w_min)
    y = np.full(n.shape, np.nan)
    if not np.any(ok):
        return y
    tg = target[ok]
    lo = np.zeros_like(tg)
    hi = np.full_like(tg, Y_MAX)
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        above = geometry.omega_of_y(mid) > tg
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    y[ok] = 0.5 * (lo + hi)
    return y


def saddle_action(geometry: WellGeometry, n: int, nu: float):
    """Action I with nω(I) = ν, or None when the saddle condition fails."""
    y = _saddle_y(geometry, n, nu)
    if not np.isfinite(y):
        return None
    return float(geometry._w.I_of_y(y) * geometry.params.action_unit)



def _check_path(path: InstantonPath):
    pr = path.geometry.params
    if not pr.kappa > 0:
        raise ValidationError("kappa must be positive for the susceptibility", field="kappa")
    if path.regime == "quantum_T0" and pr.ratio < 0.5:
        warnings.warn(
            "strict zero-temperature path with delta < lam is fragile; perturbation theory "
            "around it is not reliable",
            ValidityWarning,
            stacklevel=3,
        )


def _chi_at(path: InstantonPath, n, y):
    """|χ_n| at native coordinates y (all valid saddles)."""
    g = path.geometry
    pr = g.params
    au = pr.action_unit
    n = np.asarray(n, dtype=int)
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        return np.zeros(0)
    if g.y_D is not None:
        y = np.where(np.abs(y - g.y_D) < _Y_EPS, g.y_D + np.where(y < g.y_D, -_Y_EPS, _Y_EPS), y)
    p, pt = path.p_at_y(y)
    I = g._w.I_of_y(y) * au
    # |c_n| for each point's own harmonic
    lc = np.empty(y.shape)
    for k in np.unique(n):
        sel = n == k
        sub = g.point_y(y[sel], with_I=False)
        lc[sel] = log_coeffs(sub, [int(k)])[:, 0].real
    c = np.exp(lc) * math.sqrt(au)
    _, dw = g.omega_of_y(y, derivative=True)
    if path.regime == "classical":
        Gam = weighted_sums(pt, np.zeros_like(y), k=2) * au
        T = pr.temperature
        return pr.omega_p / T * np.sqrt(np.pi * np.abs(n) * I / (pr.kappa * np.abs(dw))) * c / Gam
    H = EffectiveHamiltonian(g, "quantum")
    # Σ n W_n e^{-np} = -∂_pK0; on the activation path its size is |∂_tI|
    dIdt = np.abs(H.series_at(pt, p, k=1, margin=0.0))
    return np.sqrt(2 * np.pi) * c * 2 * np.abs(np.sinh(n * p / 2)) / np.sqrt(np.abs(n * dw) * dIdt)


def _chi_grid(path: InstantonPath, n, nu):
    """|χ| and saddle actions for broadcast arrays n, ν; zero where background."""
    g = path.geometry
    n, nu = np.broadcast_arrays(np.asarray(n, dtype=int), np.asarray(nu, dtype=float))
    y = _saddle_y(g, n, nu)
    ok = np.isfinite(y)
    val = np.zeros(n.shape)
    I = np.full(n.shape, np.nan)
    if np.any(ok):
        val[ok] = _chi_at(path, n[ok], y[ok])
        I[ok] = g._w.I_of_y(y[ok]) * g.params.action_unit
    return val, I, ok


def chi_n(n: int, nu: float, path: InstantonPath) -> ChiValue:
    """|χ_n(ν)| from the path's own regime (classical or quantum)."""
    if n == 0:
        raise ValidationError("harmonic index must be nonzero", field="n")
    _check_path(path)
    val, I, ok = _chi_grid(path, np.array([n]), np.array([nu]))
    if not ok[0]:
        return ChiValue(0.0, math.nan, BACKGROUND)
    return ChiValue(float(val[0]), float(I[0]), SADDLE)


def chi_n_classical(n: int, nu: float, path: InstantonPath) -> ChiValue:
    """(ω_p/T) sqrt(π|n|I / (κ|∂_Iω|)) |c_n|/Γ at the saddle."""
    if path.regime != "classical":
        raise ValidationError("chi_n_classical needs a classical path", field="regime")
    return chi_n(n, nu, path)


def chi_n_quantum(n: int, nu: float, path: InstantonPath) -> ChiValue:
    """sqrt(2π)|c_n| 2|sinh(np/2)| / sqrt(|n∂_Iω| ∂_tI) at the saddle."""
    if path.regime == "classical":
        raise ValidationError("chi_n_quantum needs a quantum path", field="regime")
    return chi_n(n, nu, path)


# ---------------------------------------------------------------- resonances
def omega_I(params) -> float:
    """∂ω/∂I at the bottom of the well."""
    lam, d, g = params.lam, params.delta, params.g
    return -g * (lam - d / 8) / (lam - d / 2)


def peak_prefactor(n: int, params, regime="classical", n_B=None) -> float:
    """Closed-form a_n (classical) or A_n (quantum) of the resonance onset.

    Uses |c_n| ≈ (λg/ω_min²)^((|n|-1)/2) (cosh β or |sinh β|)^|n| I^{|n|/2}
    near the bottom of the well.
    """
    if n == 0:
        raise ValidationError("harmonic index must be nonzero", field="n")
    from .classical import special_energies

    se = special_energies(params)
    ch, sh = cosh_sinh_beta(params)
    k = abs(n)
    Cn = (params.lam * params.g / se.omega_min**2) ** ((k - 1) / 2) * (ch if n > 0 else abs(sh)) ** k
    if regime == "classical":
        return math.sqrt(k) * se.omega_min / se.omega_bar * Cn
    if regime != "quantum":
        raise ValidationError(f"unknown regime {regime!r}", field="regime")
    nb = params.occupation if n_B is None else n_B
    x = (2 * nb + 1) * se.omega_bar
    # 2 sinh(|n| p*/2) with e^{p*} = (x + ω_min)/(x - ω_min)
    num = (x + se.omega_min) ** k - (x - se.omega_min) ** k
    return num / (math.sqrt(k) * (x * x - se.omega_min**2) ** (k / 2)) * Cn


def resonance_asymptotics(n: int, delta_nu, params, regime="classical", n_B=None, T=None, linear=0.0):
    """Leading onset of |χ_n| at |ν| = |n|ω_min - δν.

    ``linear`` is the coefficient of δν/|ω_I| for n = ±1 (b_1 or B_1), which
    only a fit can supply; it defaults to zero. Returns 0 for δν < 0.
    """
    dn = np.asarray(delta_nu, dtype=float)
    wI = abs(omega_I(params))
    if np.any(dn > 0.1 * wI):
        warnings.warn("delta_nu outside the asymptotic window (> 0.1|omega_I|)", ValidityWarning, stacklevel=2)
    pref = peak_prefactor(n, params, regime, n_B=n_B)
    if regime == "classical":
        T = params.temperature if T is None else T
        pref = pref * params.omega_p / T
    base = pref * math.sqrt(math.pi / (params.kappa * wI))
    k = abs(n)
    if k == 1:
        shape = 1.0 + linear * dn / wI
    else:
        shape = np.abs(np.maximum(dn, 0.0) / (k * wI)) ** ((k - 1) / 2)
    out = np.where(dn > 0, base * shape, 0.0)
    return float(out) if out.ndim == 0 else out


def linear_coefficient(path: InstantonPath, n: int = 1, frac=0.05, points=24):
    """Fit |χ_n| = h (1 + b δν/|ω_I|) over δν in (0, frac|ω_I|].

    Returns ``(h, b)``: the extrapolated peak height at δν → 0 and the
    linear coefficient (b_1 or B_1). Quadratic least squares in δν.
    """
    pr = path.geometry.params
    wI = abs(omega_I(pr))
    w_min = path.geometry.special.omega_min
    x = np.linspace(frac / points, frac, points)
    nu = np.sign(n) * (abs(n) * w_min - x * wI)
    val, _, ok = _chi_grid(path, np.full(x.shape, n), nu)
    if not np.all(ok):
        raise DomainError("saddle not solvable on the whole fit window")
    c2, c1, c0 = np.polyfit(x, val, 2)
    return float(c0), float(c1 / c0)


# ---------------------------------------------------------------- spectrum
def _first_band(nu, w_min):
    return int(math.floor(abs(nu) / w_min)) + 1


def dominant_harmonic(nu: float, geometry: WellGeometry, path: InstantonPath | None = None, n_max: int = 16) -> int:
    """Smallest admissible harmonic for ν, with the Δ<0 handoff near c_n = 0.

    With ``path`` given and Δ < 0, a negative harmonic n hands over to n-1
    wherever |χ_{n-1}| exceeds |χ_n| (around ν = nω(I_D), where c_n
    vanishes).
    """
    if nu == 0:
        raise ValidationError("nu must be nonzero", field="nu")
    w_min = geometry.special.omega_min
    if abs(nu) >= n_max * w_min:
        raise ValidationError(f"|nu| beyond the harmonic window n_max*omega_min = {n_max * w_min:g}", field="nu")
    m = _first_band(nu, w_min)
    n = int(math.copysign(m, nu))
    if path is not None and n < 0 and geometry.params.delta < 0:
        val, _, _ = _chi_grid(path, np.array([n, n - 1]), np.array([nu, nu]))
        if val[1] > val[0]:
            return n - 1
    return n


def _dominant_from_table(nu, harmonics, table, w_min, handoff):
    """Dominant harmonic per ν from precomputed |χ|, same rule as dominant_harmonic."""
    out = np.zeros(len(nu), dtype=int)
    index = {int(k): j for j, k in enumerate(harmonics)}
    for i, v in enumerate(nu):
        if v == 0:
            continue
        n = int(math.copysign(_first_band(v, w_min), v))
        if handoff and n < 0 and (n - 1) in index and n in index:
            if table[i, index[n - 1]] > table[i, index[n]]:
                n = n - 1
        out[i] = n
    return out


@dataclass
class LSSpectrum:
    """|χ_n(ν)| on a grid with the dominant harmonic and iS¹ = 2α|χ_dom|."""

    nu: np.ndarray
    harmonics: np.ndarray
    abs_chi: np.ndarray  # shape (len(nu), len(harmonics))
    dominant: np.ndarray
    iS1: np.ndarray
    regime: str
    alpha: float = 1.0
    saddle_I: np.ndarray = field(default=None, repr=False)

    def chi(self, n):
        return self.abs_chi[:, list(self.harmonics).index(n)]

    def dominant_chi(self):
        out = np.zeros(len(self.nu))
        for j, n in enumerate(self.harmonics):
            sel = self.dominant == n
            out[sel] = self.abs_chi[sel, j]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("nu,n,abs_chi_n,dominant,iS1\n")
        for i, v in enumerate(self.nu):
            for j, n in enumerate(self.harmonics):
                buf.write(
                    f"{float(v)!r},{int(n)},{float(self.abs_chi[i, j])!r},"
                    f"{int(self.dominant[i] == n)},{float(self.iS1[i])!r}\n"
                )
        return buf.getvalue()

    def to_json(self) -> str:
        rows = []
        for i, v in enumerate(self.nu):
            rows.append({
                "nu": float(v),
                "dominant": int(self.dominant[i]),
                "iS1": float(self.iS1[i]),
                "harmonics": [
                    {"n": int(n), "abs_chi_n": float(self.abs_chi[i, j])} for j, n in enumerate(self.harmonics)
                ],
            })
        doc = {"regime": self.regime, "alpha": float(self.alpha), "spectrum": rows}
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _regime_label(path: InstantonPath):
    if path.regime == "classical":
        return "classical"
    return f"quantum(n_B={float(path.n_B or 0.0)!r})"


def compute_spectrum(path: InstantonPath, nu, harmonics=None, alpha=1.0, workers=1, chunk=64) -> LSSpectrum:
    """Evaluate |χ_n| for every (ν, n) and assemble iS¹ from the dominant one.

    ``harmonics`` defaults to ±1 .. ±(first band of max|ν| + 1). Chunks of
    the ν grid go to a thread pool of ``workers``; assembly keeps grid order.
    """
    _check_path(path)
    g = path.geometry
    nu = np.asarray(nu, dtype=float)
    w_min = g.special.omega_min
    if harmonics is None:
        top = _first_band(float(np.max(np.abs(nu))), w_min) + 1
        harmonics = [k for k in range(-top, top + 1) if k != 0]
    harmonics = np.array(sorted(int(k) for k in harmonics), dtype=int)
    if np.any(harmonics == 0):
        raise ValidationError("harmonic 0 is not a resonance", field="harmonics")

    def work(sl):
        nn, vv = np.meshgrid(harmonics, nu[sl])
        val, I, _ = _chi_grid(path, nn, vv)
        return val, I

    slices = [slice(a, min(a + chunk, len(nu))) for a in range(0, len(nu), chunk)]
    if workers > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(work, slices))
    else:
        parts = [work(s) for s in slices]
    table = np.concatenate([p[0] for p in parts], axis=0) if parts else np.zeros((0, len(harmonics)))
    Isad = np.concatenate([p[1] for p in parts], axis=0) if parts else np.zeros((0, len(harmonics)))
    dom = _dominant_from_table(nu, harmonics, table, w_min, g.params.delta < 0)
    spec = LSSpectrum(nu, harmonics, table, dom, np.zeros(len(nu)), _regime_label(path), alpha, Isad)
    spec.iS1 = 2.0 * alpha * spec.dominant_chi()
    return spec


class ExponentCorrection(NamedTuple):
    iS1: float
    n: int
    abs_chi: float
    subleading: float
    perturbativity: float


def exponent_correction(nu: float, drive: DriveParams, path: InstantonPath, subleading=True) -> ExponentCorrection:
    """iS¹ ≈ 2α|χ_n(ν)| from the dominant harmonic (always >= 0).

    ``perturbativity`` is iS¹/|iS⁰|; above 0.3 a warning is issued.
    The next harmonic in the same direction is reported for diagnostics.
    """
    g = path.geometry
    n = dominant_harmonic(nu, g, path)
    if drive.alpha == 0:
        return ExponentCorrection(0.0, n, 0.0, 0.0, 0.0)
    _check_path(path)
    val, _, _ = _chi_grid(path, np.array([n, n + int(math.copysign(1, n))]), np.array([nu, nu]))
    iS1 = 2.0 * abs(drive.alpha) * float(val[0])
    sub = 2.0 * abs(drive.alpha) * float(val[1]) if subleading else 0.0
    ratio = iS1 / abs(path.action) if path.action else math.inf
    if ratio > PERTURBATIVE_LIMIT:
        warnings.warn(f"first-order correction is {ratio:.2g} of the bare exponent", ValidityWarning, stacklevel=2)
    return ExponentCorrection(iS1, n, float(val[0]), sub, ratio)


def crossover_temperature(params) -> float:
    """Diagnostic T* = ω_p / log(ω_min/Δ); NaN when Δ <= 0 or ω_min <= Δ."""
    from .classical import special_energies

    d = params.delta
    w = special_energies(params).omega_min
    if d <= 0 or w <= d:
        return math.nan
    return params.omega_p / math.log(w / d)
