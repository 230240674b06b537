import math

import numpy as np
import pytest
from scipy import integrate, optimize

from pslip import (
    EffectiveHamiltonian,
    OscParams,
    WellGeometry,
    action_integral,
    classical_instanton,
    convergence_radii,
    fragility_action,
    noise_kernel,
    phase_portrait,
    quantum_finiteT_instanton,
    quantum_T0_instanton,
    quantum_Tto0_instanton,
)
from pslip.errors import ValidationError
from pslip.instanton import p_star_quantum


def G(ratio, lam=0.5, g=1.0, **kw):
    kw.setdefault("kappa", 1e-3)
    return WellGeometry(OscParams(delta=2 * lam * ratio, lam=lam, g=g, **kw), 64)


def brute_R(geo, I_hi=None, points=None):
    """R = (g/λ)∫p dI with p found by bracketing K0(I, p) = 0 at every I."""
    pr = geo.params
    H = EffectiveHamiltonian(geo, "quantum")

    def p_of(I):
        plt, pgt = convergence_radii(I, geo)
        hi = pgt if H.zero_T else min(plt, pgt)
        hi *= 1 - 1e-9
        return optimize.brentq(lambda p: H.K0(I, p, margin=0.0), 1e-9 * hi, hi, xtol=1e-15, rtol=1e-14)

    top = geo.I_top if I_hi is None else I_hi
    val, _ = integrate.quad(p_of, 0, top, points=points, limit=200, epsrel=1e-9)
    return pr.g / pr.lam * val


def test_classical_R_against_direct_quadrature():
    geo = G(0.3, T=1.0)
    path = classical_instanton(geo)
    # p = 2κI/(DΓ); with ω_p/T = 1 scaling R = (g/λ)∫ I/Γ dI
    val, _ = integrate.quad(lambda I: I / noise_kernel(I, geo), 0, geo.I_top, limit=200, epsrel=1e-11)
    assert path.R == pytest.approx(geo.params.g / geo.params.lam * val, rel=1e-8)
    assert path.R == pytest.approx(0.6189455, rel=1e-6)
    assert path.action == pytest.approx(-0.5 * path.R, rel=1e-14)
    # exponent scales as 1/T, R does not
    p2 = classical_instanton(geo, T=2.0)
    assert p2.R == pytest.approx(path.R, rel=1e-13)
    assert p2.action == pytest.approx(0.5 * path.action, rel=1e-13)


def test_zero_T_path_against_brute_force():
    geo = G(0.6, n_B=0.0)
    path = quantum_T0_instanton(geo)
    assert path.R == pytest.approx(brute_R(geo), rel=1e-6)
    assert path.R == pytest.approx(0.748037, rel=1e-5)


def test_fragile_limit_below_I_F():
    geo = G(0.3, n_B=0.0)
    t0 = quantum_T0_instanton(geo)
    lim = quantum_Tto0_instanton(geo)
    I_F, yF = fragility_action(geo)
    assert yF is not None and I_F / geo.I_top == pytest.approx(0.1505, abs=5e-4)
    # both paths agree below I_F, the limit path is lower above it
    I = np.linspace(0.05, 0.9, 9) * I_F
    assert np.allclose(t0.p_at(I), lim.p_at(I), rtol=1e-12)
    J = np.linspace(1.2, 5.0, 9) * I_F
    assert np.all(lim.p_at(J) < t0.p_at(J))
    assert lim.R < t0.R
    assert (t0.R, lim.R) == (pytest.approx(2.71047, rel=1e-5), pytest.approx(2.33645, rel=1e-5))


def test_finite_T_against_brute_force():
    geo = G(0.3, n_B=1.0)
    path = quantum_finiteT_instanton(geo)
    assert path.R == pytest.approx(brute_R(geo), rel=1e-6)
    assert path.R == pytest.approx(0.42542, rel=1e-4)
    assert float(np.max(path.residual)) < 1e-8


def test_low_temperature_approaches_limit_path():
    geo = G(0.3, n_B=0.0)
    lim = quantum_Tto0_instanton(geo).R
    Rs = [quantum_finiteT_instanton(geo, n_B=nb).R for nb in (1e-1, 1e-2, 1e-3)]
    assert Rs[0] < Rs[1] < Rs[2] < lim * (1 + 1e-6)
    assert abs(Rs[2] - lim) < abs(Rs[0] - lim)


def test_negative_detuning_log_divergence_is_integrable():
    geo = G(-0.4, n_B=0.0)
    path = quantum_T0_instanton(geo)
    assert path.singular_I == geo.I_D
    assert path.R == pytest.approx(14.1321, rel=1e-5)
    assert action_integral(path, "action") == pytest.approx(path.action, rel=1e-7)


@pytest.mark.parametrize("ratio", [0.3, -0.4])
def test_action_routes_agree(ratio):
    geo = G(ratio, T=1.0)
    path = classical_instanton(geo)
    assert action_integral(path, "action") == pytest.approx(action_integral(path), rel=1e-9)
    with pytest.raises(ValueError):
        action_integral(path, "other")


def test_zero_T_starting_slope():
    geo = G(0.3, n_B=0.0)
    path = quantum_T0_instanton(geo)
    se = geo.special
    assert path.p_star == pytest.approx(math.log((se.omega_bar + se.omega_min) / (se.omega_bar - se.omega_min)))
    assert path.p_at(np.array([1e-9 * geo.I_top]))[0] == pytest.approx(p_star_quantum(geo, 0.0), rel=1e-8)


def test_validation():
    with pytest.raises(ValidationError):
        classical_instanton(G(0.3, n_B=0.0))
    with pytest.raises(ValidationError):
        quantum_finiteT_instanton(G(0.3, n_B=0.0))


def test_portrait_shapes_and_levels():
    geo = G(0.3, n_B=0.0)
    pp = phase_portrait(geo, grid=(64, 64))
    assert pp["K0"].shape == (64, 64)
    assert "T=0" in pp["lines"] and "I_F" in pp["markers"]
    j0 = int(np.argmin(np.abs(pp["p"])))
    col = pp["K0"][:, j0]
    assert np.all(np.abs(col[np.isfinite(col)]) < 1e-4)
    with pytest.raises(ValidationError):
        phase_portrait(geo, grid=(10, 10))
