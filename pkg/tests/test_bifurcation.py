import math

import mpmath as mp
import numpy as np
import pytest

from pslip import BifurcationParams, OscParams, base_exponent, bif_LS, effective_potential, regime_selector
from pslip.bifurcation import barrier_height, decay_constant, gamma, loggamma, potential_minimum
from pslip.errors import ValidationError, ValidityWarning


@pytest.mark.parametrize("z", [0.5, 3.7, 0.5 + 4j, -2.3 + 0.7j, 1 - 25j, 12.0 + 3j, -0.5])
def test_gamma_against_mpmath(z):
    assert abs(gamma(z) - complex(mp.gamma(z))) <= 1e-12 * abs(complex(mp.gamma(z)))


def test_gamma_vectorises_and_loggamma_real_part():
    z = np.array([0.5 + 1j, 2.0, 3.5 - 2j])
    assert np.allclose(gamma(z), [complex(mp.gamma(v)) for v in z], rtol=1e-13)
    assert loggamma(0.5 + 10j).real == pytest.approx(float(mp.re(mp.loggamma(0.5 + 10j))), rel=1e-13)


def test_half_line_reflection():
    ys = np.linspace(-30, 30, 241)
    err = max(abs(abs(gamma(0.5 + 1j * y)) ** 2 * math.cosh(math.pi * y) / math.pi - 1) for y in ys)
    assert err < 1e-12


def test_potential_geometry():
    b = BifurcationParams(0.05, kappa=0.1, T=1.0)
    Q = np.linspace(0, 0.3, 30001)
    U = effective_potential(Q, b)
    k = int(np.argmin(U))
    assert Q[k] == pytest.approx(potential_minimum(b), abs=2e-5)
    assert -U[k] == pytest.approx(barrier_height(b), rel=1e-8)
    assert effective_potential(0.0, b) == 0.0


def test_base_exponent_is_barrier_over_noise():
    b = BifurcationParams(0.05, kappa=0.1, T=2.0)
    for regime in ("classical", "quantum"):
        ref = -(8 * b.lam / b.g) * b.eps**2 * barrier_height(b) / b.D(regime)
        assert base_exponent(b, regime) == pytest.approx(ref, rel=1e-13)
    bq = BifurcationParams(0.05, kappa=0.1, n_B=0.0)
    assert base_exponent(bq, "quantum") == pytest.approx(-bq.Delta_B * 0.05**2, rel=1e-14)
    with pytest.raises(ValidationError):
        base_exponent(bq, "classical")


def test_ls_closed_form_and_shape():
    b = BifurcationParams(0.04, kappa=0.1, T=1.5)
    alpha = 0.3
    assert bif_LS(0.0, b, alpha) == pytest.approx(alpha / 3.0 * math.sqrt(0.04 / 0.5), rel=1e-13)
    u = np.linspace(0.5, 20, 40)
    ref = [
        alpha / 3.0 * math.sqrt(0.04 / (math.pi * 0.5)) * abs(complex(mp.gamma(0.5 - 0.5j * x) * mp.gamma(1 + 0.5j * x)))
        for x in u
    ]
    assert np.allclose(bif_LS(u, b, alpha), ref, rtol=1e-12)
    assert np.array_equal(bif_LS(-u, b, alpha), bif_LS(u, b, alpha))
    assert 1.4 < decay_constant(b) < math.pi / 2 + 1e-3


def test_quantum_prefactor_tends_to_classical():
    b = BifurcationParams(0.05, kappa=0.1, T=50.0)
    assert bif_LS(2.0, b, regime="quantum") / bif_LS(2.0, b, regime="classical") == pytest.approx(1.0, abs=1e-4)
    b0 = BifurcationParams(0.05, kappa=0.1, n_B=0.0)
    assert bif_LS(0.0, b0, 1.0, "quantum") == pytest.approx(math.sqrt(0.05 / 0.5), rel=1e-13)


def test_parameter_checks():
    with pytest.raises(ValidationError):
        BifurcationParams(-0.1)
    with pytest.raises(ValidationError):
        BifurcationParams(0.05, kappa=1.5)
    with pytest.raises(ValidationError):
        BifurcationParams(0.05, T=1.0, n_B=1.0)
    with pytest.warns(ValidityWarning):
        BifurcationParams(0.3)
    b = BifurcationParams(0.05, kappa=0.1)
    assert b.Delta == pytest.approx(math.sqrt(1 - 0.01) - 0.05)
    assert b.upsilon(2.0) == pytest.approx(0.1 * 2.0 / (b.Delta_B * 0.05))


def test_omega_min_from_linearisation():
    b = BifurcationParams(0.03, lam=0.5, g=1.0, kappa=0.2)
    lam, g, k, d = b.lam, b.g, b.kappa, b.Delta

    def rhs(z):
        phi = z[0] + 1j * z[1]
        dphi = -1j * (d * phi + 2 * lam * np.conj(phi) + 0.5 * g * abs(phi) ** 2 * phi) - k * phi
        return np.array([dphi.real, dphi.imag])

    from scipy.optimize import fsolve

    z0 = fsolve(rhs, [0.1, 0.3], xtol=1e-14)
    assert np.linalg.norm(z0) > 1e-3
    J = np.empty((2, 2))
    h = 1e-7
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        J[:, j] = (rhs(z0 + e) - rhs(z0 - e)) / (2 * h)
    mu = np.linalg.eigvals(J)
    # eigenvalues -κ ± sqrt(κ² - ω²): their product is ω²
    assert np.real(np.prod(mu)) == pytest.approx(b.omega_min**2, rel=1e-6)
    assert np.sum(mu).real == pytest.approx(-2 * k, rel=1e-8)
    b0 = BifurcationParams(0.1, kappa=1e-9)
    assert b0.omega_min == pytest.approx(2 * math.sqrt(2 * 0.5 * (1 - b0.Delta)), rel=1e-6)


def test_regime_selector():
    assert regime_selector(OscParams(delta=0.3, lam=0.5, g=1.0, kappa=1e-3)) == "underdamped"
    assert regime_selector(OscParams(delta=0.3, lam=0.5, g=1.0, kappa=2.0)) == "overdamped"
    assert regime_selector(BifurcationParams(0.01, kappa=0.5)) == "overdamped"
    with pytest.warns(ValidityWarning):
        assert regime_selector(OscParams(delta=0.3, lam=0.5, g=1.0, kappa=0.5)) == "crossover"
