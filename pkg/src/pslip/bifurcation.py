"""Overdamped switching near the bifurcation point.

Close to Δ_B = sqrt(4λ² - κ²) the slow coordinate relaxes in a quartic
double well and the rate exponent is a barrier height. Distances from the
bifurcation are measured by ε with Δ = Δ_B - 2λε.
"""
from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError, ValidityWarning
from .params import OscParams, occupation_from_T

__all__ = [
    "gamma",
    "loggamma",
    "BifurcationParams",
    "effective_potential",
    "potential_minimum",
    "barrier_height",
    "base_exponent",
    "bif_LS",
    "decay_constant",
    "regime_selector",
    "UNDERDAMPED_FRACTION",
]

# Lanczos approximation, g = 7 with 9 coefficients
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)

UNDERDAMPED_FRACTION = 0.1


def loggamma(z):
    """log Γ(z) for complex z (principal branch up to 2πi multiples)."""
    z = complex(z)
    if z.real < 0.5:
        # reflection: Γ(z)Γ(1-z) = π / sin(πz)
        return math.log(math.pi) - cmath.log(cmath.sin(math.pi * z)) - loggamma(1 - z)
    z -= 1
    a = _LANCZOS[0]
    t = z + _LANCZOS_G + 0.5
    for k in range(1, len(_LANCZOS)):
        a += _LANCZOS[k] / (z + k)
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(a)


def gamma(z):
    """Complex Γ(z); vectorises over arrays."""
    if np.ndim(z):
        return np.vectorize(lambda v: cmath.exp(loggamma(v)), otypes=[complex])(z)
    return cmath.exp(loggamma(z))


@dataclass(frozen=True)
class BifurcationParams:
    """Shallow-well parameters: Δ = Δ_B - 2λε."""

    eps: float
    lam: float = 0.5
    g: float = 1.0
    kappa: float = 0.1
    omega_p: float = 1.0
    T: float | None = None
    n_B: float | None = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ValidationError("eps must be positive", field="eps")
        if self.eps > 0.2:
            warnings.warn("eps is not small; the quartic reduction is only leading order", ValidityWarning, stacklevel=3)
        if not 0 < self.kappa < 2 * self.lam:
            raise ValidationError("need 0 < kappa < 2*lam", field="kappa")
        if self.lam <= 0 or self.g <= 0 or self.omega_p <= 0:
            raise ValidationError("lam, g and omega_p must be positive", field="lam")
        if self.T is not None and self.n_B is not None:
            raise ValidationError("give either T or n_B, not both", field="T")
        for name in ("T", "n_B"):
            v = getattr(self, name)
            if v is not None and (v < 0 or not math.isfinite(v)):
                raise ValidationError(f"{name} must be finite and >= 0", field=name)

    @classmethod
    def from_params(cls, params: OscParams, eps: float):
        return cls(eps, params.lam, params.g, params.kappa, params.omega_p, params.T, params.n_B)

    @property
    def Delta_B(self) -> float:
        return math.sqrt(4 * self.lam**2 - self.kappa**2)

    @property
    def Delta(self) -> float:
        return self.Delta_B - 2 * self.lam * self.eps

    @property
    def occupation(self) -> float:
        if self.n_B is not None:
            return float(self.n_B)
        if self.T is not None:
            return occupation_from_T(self.T, self.omega_p)
        return 0.0

    @property
    def temperature(self) -> float:
        if self.T is not None:
            return float(self.T)
        nb = self.occupation
        return 0.0 if nb == 0 else self.omega_p / math.log1p(1.0 / nb)

    def tanh_factor(self) -> float:
        """tanh(ω_p/2T) = 1/(2n_B + 1)."""
        return 1.0 / (2 * self.occupation + 1)

    def D(self, regime="classical") -> float:
        """Noise strength of the slow coordinate."""
        if regime == "classical":
            T = self.temperature
            if not T > 0:
                raise ValidationError("classical noise strength needs T > 0", field="T")
            return self.kappa * T / (self.omega_p * self.lam)
        if regime == "quantum":
            return self.kappa * (2 * self.occupation + 1) / (2 * self.lam)
        raise ValidationError(f"unknown regime {regime!r}", field="regime")

    def upsilon(self, nu):
        """Scaled frequency κν / (2λΔ_Bε)."""
        return self.kappa * np.asarray(nu, dtype=float) / (2 * self.lam * self.Delta_B * self.eps)

    @property
    def omega_min(self) -> float:
        """Intrawell frequency at the damped stable state, sqrt(8λΔ_B ε).

        Linearising about that state gives rates -κ ± sqrt(κ² - ω_min²);
        ω_min vanishes at the bifurcation and equals 2sqrt(2λ(2λ-Δ)) for κ = 0.
        """
        return math.sqrt(8 * self.lam * self.Delta_B * self.eps)


def effective_potential(Q, bif: BifurcationParams):
    """U(Q) = -(Δ_B/2κ)Q² + (Δ_B λ²/κ³)Q⁴."""
    Q = np.asarray(Q, dtype=float)
    DB, k, lam = bif.Delta_B, bif.kappa, bif.lam
    out = -(DB / (2 * k)) * Q**2 + (DB * lam**2 / k**3) * Q**4
    return float(out) if out.ndim == 0 else out


def potential_minimum(bif: BifurcationParams) -> float:
    """Positive minimum of U, Q_min = κ/(2λ)."""
    return bif.kappa / (2 * bif.lam)


def barrier_height(bif: BifurcationParams) -> float:
    """U(0) - U(Q_min) = Δ_B κ / (16 λ²)."""
    return bif.Delta_B * bif.kappa / (16 * bif.lam**2)


def base_exponent(bif: BifurcationParams, regime="classical") -> float:
    """iS⁰ = -(8λ/g) ε² ΔU / D, the barrier over the noise strength."""
    if regime == "classical":
        T = bif.temperature
        if not T > 0:
            raise ValidationError("classical exponent needs T > 0", field="T")
        return -bif.Delta_B * bif.omega_p * bif.eps**2 / (2 * bif.g * T)
    if regime == "quantum":
        return -bif.tanh_factor() * bif.Delta_B * bif.eps**2 / bif.g
    raise ValidationError(f"unknown regime {regime!r}", field="regime")


def _gamma_pair(u):
    """|Γ((1 - iυ)/2) Γ(1 + iυ/2)| for a scalar υ, via log Γ."""
    return math.exp((loggamma(0.5 - 0.5j * u) + loggamma(1 + 0.5j * u)).real)


def bif_LS(upsilon, bif: BifurcationParams, alpha=1.0, regime="classical"):
    """iS¹(υ) of the overdamped regime.

    Classical prefactor αω_p/2T, quantum α tanh(ω_p/2T), both times
    sqrt(ε/(πλg)) |Γ((1-iυ)/2) Γ(1+iυ/2)|.
    """
    if regime == "classical":
        T = bif.temperature
        if not T > 0:
            raise ValidationError("classical LS needs T > 0", field="T")
        pref = alpha * bif.omega_p / (2 * T)
    elif regime == "quantum":
        pref = alpha * bif.tanh_factor()
    else:
        raise ValidationError(f"unknown regime {regime!r}", field="regime")
    pref *= math.sqrt(bif.eps / (math.pi * bif.lam * bif.g))
    u = np.asarray(upsilon, dtype=float)
    vals = np.array([_gamma_pair(float(x)) for x in u.ravel()]).reshape(u.shape)
    out = pref * vals
    return float(out) if out.ndim == 0 else out


def decay_constant(bif: BifurcationParams, window=(10.0, 30.0), points=41) -> float:
    """Fitted -d log iS¹/dυ over a large-υ window (reported, not asserted)."""
    u = np.linspace(window[0], window[1], points)
    y = np.log(bif_LS(u, bif, regime="quantum"))
    slope, _ = np.polyfit(u, y, 1)
    return float(-slope)


def regime_selector(params) -> str:
    """underdamped (κ < 0.1ω_min), overdamped (κ > ω_min) or crossover.

    ``params`` is an :class:`OscParams` or :class:`BifurcationParams`.
    """
    if isinstance(params, BifurcationParams):
        w = params.omega_min
    else:
        w = 2 * math.sqrt(2 * params.lam * (2 * params.lam - params.delta))
    k = params.kappa
    if k < UNDERDAMPED_FRACTION * w:
        return "underdamped"
    if k > w:
        return "overdamped"
    warnings.warn(
        f"kappa/omega_min = {k / w:.3g} lies between the underdamped and overdamped limits; "
        "both engines are approximate here",
        ValidityWarning,
        stacklevel=2,
    )
    return "crossover"
