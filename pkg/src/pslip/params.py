"""Model parameter containers and validation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import ValidationError

__all__ = ["OscParams", "DriveParams", "occupation_from_T", "T_from_occupation"]


def occupation_from_T(T, omega_p):
    """Bose number n_B = 1/(exp(ω_p/T) - 1); T = 0 gives 0."""
    if T == 0:
        return 0.0
    x = omega_p / T
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


def T_from_occupation(n_B, omega_p):
    if n_B == 0:
        return 0.0
    return omega_p / math.log1p(1.0 / n_B)


@dataclass(frozen=True)
class OscParams:
    """Rotating-frame model of the parametric oscillator.

    Exactly one of ``T`` and ``n_B`` should be given; the other is derived.
    Temperature is measured in frequency units.
    """

    delta: float
    lam: float = 0.5
    g: float = 1.0
    kappa: float = 1e-3
    omega_p: float = 1.0
    T: float | None = None
    n_B: float | None = None
    _occ: float = field(init=False, repr=False, compare=False, default=0.0)

    def __post_init__(self):
        for name in ("delta", "lam", "g", "kappa", "omega_p"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValidationError(f"{name} must be a finite number, got {v!r}", field=name)
        if self.lam <= 0:
            raise ValidationError("lam must be positive", field="lam")
        if self.g <= 0:
            raise ValidationError("g must be positive", field="g")
        if self.kappa < 0:
            raise ValidationError("kappa must be non-negative", field="kappa")
        if self.omega_p <= 0:
            raise ValidationError("omega_p must be positive", field="omega_p")
        if not abs(self.delta) < 2 * self.lam:
            raise ValidationError(
                "need |delta| < 2*lam for two stable vibrational states", field="delta"
            )
        if self.T is not None and self.n_B is not None:
            raise ValidationError("give either T or n_B, not both", field="T")
        if self.T is not None:
            if self.T < 0 or not math.isfinite(self.T):
                raise ValidationError("T must be finite and >= 0", field="T")
            occ = occupation_from_T(self.T, self.omega_p)
        elif self.n_B is not None:
            if self.n_B < 0 or not math.isfinite(self.n_B):
                raise ValidationError("n_B must be finite and >= 0", field="n_B")
            occ = float(self.n_B)
        else:
            occ = 0.0
        object.__setattr__(self, "_occ", occ)

    @property
    def occupation(self) -> float:
        return self._occ

    @property
    def temperature(self) -> float:
        if self.T is not None:
            return float(self.T)
        return T_from_occupation(self._occ, self.omega_p)

    @property
    def ratio(self) -> float:
        """Dimensionless detuning Δ/2λ, the only parameter the scaled problem keeps."""
        return self.delta / (2 * self.lam)

    @property
    def gamma_loss(self) -> float:
        return 2.0 * (self._occ + 1.0) * self.kappa

    @property
    def gamma_gain(self) -> float:
        return 2.0 * self._occ * self.kappa

    def with_(self, **kw) -> "OscParams":
        if "T" in kw and "n_B" not in kw:
            kw["n_B"] = None
        if "n_B" in kw and "T" not in kw:
            kw["T"] = None
        return replace(self, **kw)

    # unit conversions between dimensional and scaled quantities
    @property
    def energy_unit(self) -> float:
        return 2 * self.lam**2 / self.g

    @property
    def action_unit(self) -> float:
        return self.lam / self.g

    @property
    def freq_unit(self) -> float:
        return 2 * self.lam


@dataclass(frozen=True)
class DriveParams:
    """Weak spectroscopic drive: amplitude, reduced frequency ν and phase."""

    alpha: float = 0.0
    nu: float = 0.0
    phi_d: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "nu", "phi_d"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValidationError(f"{name} must be a finite number", field=name)
        if self.alpha < 0:
            raise ValidationError("alpha must be non-negative", field="alpha")
