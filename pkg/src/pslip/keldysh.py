"""Effective (Keldysh) Hamiltonians of the action variable.

Quantum series sums use the exact geometric tails of |c_n|², so they stay
accurate right up to the edge of the convergence strip.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .action_angle import WellGeometry, log_coeffs, weighted_sums, noise_kernel
from .classical import classical_solution
from .errors import ConvergenceError, DomainError, ValidationError
from .params import DriveParams

__all__ = ["EffectiveHamiltonian", "strip", "STRIP_MARGIN"]

STRIP_MARGIN = 1e-3


def strip(geometry: WellGeometry, I, zero_T: bool):
    """Convergence strip (lo, hi) of the quantum series at action I.

    At exactly zero temperature W_n ∝ |c_n|², giving the asymmetric strip
    ``(-p_<, p_>)``; any γ_g > 0 makes it ``±min(p_<, p_>)``.
    """
    pt = geometry.point(I)
    if zero_T:
        return -pt.p_lt, pt.p_gt
    w = np.minimum(pt.p_lt, pt.p_gt)
    return -w, w


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """K0 and K1 for one well in classical or quantum form."""

    geometry: WellGeometry
    mode: str = "quantum"

    def __post_init__(self):
        if self.mode not in ("classical", "quantum"):
            raise ValidationError(f"mode must be classical or quantum, got {self.mode!r}", field="mode")

    @property
    def params(self):
        return self.geometry.params

    @property
    def rates(self):
        return self.params.gamma_loss, self.params.gamma_gain

    @property
    def noise_strength(self):
        """Classical 2κT/ω_p."""
        p = self.params
        return 2 * p.kappa * p.temperature / p.omega_p

    @property
    def zero_T(self):
        return self.params.gamma_gain == 0.0

    # --- rates
    def rates_Wn(self, I, n):
        """W_n(I) = γ_ℓ|c_n|² + γ_g|c_{-n}|² for integer array n."""
        Ia = np.atleast_1d(np.asarray(I, dtype=float))
        n = np.atleast_1d(np.asarray(n, dtype=int))
        pt = self.geometry.point(Ia)
        au = self.params.action_unit
        cp = np.exp(2 * log_coeffs(pt, n).real) * au
        cm = np.exp(2 * log_coeffs(pt, -n).real) * au
        gl, gg = self.rates
        W = gl * cp + gg * cm
        if np.ndim(I) == 0:
            W = W[0]
        return W

    # --- K0
    def _check_strip(self, pt, p, margin):
        if self.zero_T:
            lo, hi = -pt.p_lt, pt.p_gt
        else:
            w = np.minimum(pt.p_lt, pt.p_gt)
            lo, hi = -w, w
        lo = lo * (1 - margin)
        hi = hi * (1 - margin)
        if np.any(p >= hi):
            k = int(np.argmax(p >= hi))
            raise ConvergenceError(f"p={p[k]:.6g} at or above upper strip bound {hi[k]:.6g}", bound="upper")
        if np.any(p <= lo):
            k = int(np.argmax(p <= lo))
            raise ConvergenceError(f"p={p[k]:.6g} at or below lower strip bound {lo[k]:.6g}", bound="lower")

    def _sums(self, I, p, k, subtract_one, margin, pt=None):
        Ia, pa = np.broadcast_arrays(np.atleast_1d(np.asarray(I, dtype=float)), np.atleast_1d(np.asarray(p, dtype=float)))
        if pt is None:
            pt = self.geometry.point(Ia)
        self._check_strip(pt, pa, margin)
        au = self.params.action_unit
        gl, gg = self.rates
        # Σ W_n n^k f(-n p): the γ_g part is Σ|c_n|² (-n)^k f(n p)
        out = gl * weighted_sums(pt, pa, k=k, subtract_one=subtract_one)
        if gg:
            out = out + gg * (-1.0) ** k * weighted_sums(pt, -pa, k=k, subtract_one=subtract_one)
        return out * au

    def K0(self, I, p, margin=STRIP_MARGIN):
        """K0(I, p); quantum form raises :class:`ConvergenceError` outside the strip."""
        if self.mode == "classical":
            I_ = np.asarray(I, dtype=float)
            p_ = np.asarray(p, dtype=float)
            pr = self.params
            val = -2 * pr.kappa * p_ * I_ + self.noise_strength * noise_kernel(I_, self.geometry) * p_ * p_
            return val if val.ndim else float(val)
        val = self._sums(I, p, 0, True, margin)
        return _shape(val, I, p)

    def dK0_dp(self, I, p, margin=STRIP_MARGIN):
        """∂K0/∂p, the instanton velocity ∂_t I."""
        if self.mode == "classical":
            I_ = np.asarray(I, dtype=float)
            p_ = np.asarray(p, dtype=float)
            val = -2 * self.params.kappa * I_ + 2 * self.noise_strength * noise_kernel(I_, self.geometry) * p_
            return val if val.ndim else float(val)
        val = -self._sums(I, p, 1, False, margin)
        return _shape(val, I, p)

    def series_at(self, pt, p, k=0, margin=STRIP_MARGIN):
        """Quantum sums at a precomputed point set (see ``WellGeometry.point``).

        k=0 gives K0, k=1 gives -∂_pK0 and k=2 gives ∂²_pK0.
        """
        return self._sums(pt.I, p, k, k == 0, margin, pt=pt)

    def d2K0_dp2(self, I, p, margin=STRIP_MARGIN):
        if self.mode == "classical":
            I_ = np.asarray(I, dtype=float)
            val = 2 * self.noise_strength * noise_kernel(I_, self.geometry) * np.ones_like(np.asarray(p, dtype=float))
            return val if val.ndim else float(val)
        return _shape(self._sums(I, p, 2, False, margin), I, p)

    def dK0_dI(self, I, p, h=None, margin=STRIP_MARGIN):
        """∂K0/∂I by central differences (used only for portrait diagnostics)."""
        I = float(I)
        if h is None:
            h = 1e-6 * self.geometry.I_top
        return (self.K0(I + h, p, margin) - self.K0(I - h, p, margin)) / (2 * h)

    def K0_integral_rep(self, I, p, n_theta=512, tol=1e-12, max_nodes=1 << 16):
        """(K_ℓ, K_g) from θ-averages of the analytically continued trajectory.

        K_ℓ = ⟨φ̄(θ + ip/2) φ(θ - ip/2) - |φ(θ)|²⟩ and K_g is the same with
        p → -p. Periodic trapezoid, nodes doubled until converged.
        """
        g = self.geometry
        I = float(I)
        p = complex(p)
        if I <= 0:
            return 0.0, 0.0
        E = g.E_of_I(I)
        w = g.omega_of_I(I)
        pr = self.params
        prev = None
        n = n_theta
        while True:
            th = 2 * np.pi * (np.arange(n) + 0.5) / n
            phi0 = classical_solution(th / w, E, pr)
            base = np.mean(np.abs(phi0) ** 2)

            def avg(q):
                a = classical_solution((th - 0.5j * q) / w, E, pr)
                b = np.conj(classical_solution(np.conj(th + 0.5j * q) / w, E, pr))
                return np.mean(b * a)

            val = (avg(p) - base, avg(-p) - base)
            if prev is not None and max(abs(val[0] - prev[0]), abs(val[1] - prev[1])) <= tol * max(1.0, abs(base)):
                break
            if n >= max_nodes:
                break
            prev = val
            n *= 2
        Kl, Kg = val
        if abs(p.imag) == 0:
            return float(Kl.real), float(Kg.real)
        return complex(Kl), complex(Kg)

    # --- drive term
    def K1(self, I, p, t, drive: DriveParams, theta=0.0, n_max=None):
        """Drive-induced K1(I, p; t) at angle ``theta`` (real after adding c.c.)."""
        if drive.alpha == 0:
            return 0.0
        from .action_angle import fourier_coeffs

        tab = fourier_coeffs(I, self.geometry, n_max=n_max)
        n = tab.n
        ph = np.exp(-1j * (n * theta - drive.nu * t - drive.phi_d))
        if self.mode == "classical":
            s = drive.alpha * p * np.sum(n * tab.c * ph)
        else:
            s = 2 * drive.alpha * np.sum(np.sinh(n * p / 2) * tab.c * ph)
        return float(2 * s.real)

    def classical_limit_check(self, I, p, n_B_large=None):
        """|K0_quantum - K0_classical| / |K0_classical| with T = ω_p n_B."""
        pr = self.params
        nb = pr.occupation if n_B_large is None else n_B_large
        if nb < 10:
            raise DomainError("classical limit check needs n_B >= 10")
        if p == 0:
            return 0.0
        q = EffectiveHamiltonian(WellGeometry(pr.with_(n_B=nb), self.geometry.n_max), "quantum")
        c = EffectiveHamiltonian(WellGeometry(pr.with_(T=pr.omega_p * nb), self.geometry.n_max), "classical")
        kq = q.K0(I, p)
        kc = c.K0(I, p)
        return abs(kq - kc) / abs(kc)


def _shape(val, I, p):
    if np.ndim(I) == 0 and np.ndim(p) == 0:
        return float(val[0])
    return val
