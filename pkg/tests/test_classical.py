import math

import mpmath as mp
import numpy as np
import pytest

from pslip import OscParams
from pslip.classical import H0, char_times, classical_solution, cosh_sinh_beta, special_energies
from pslip.errors import DivergenceError, DomainError, ValidationError


def P(d=0.3, **kw):
    return OscParams(delta=d, lam=0.5, g=1.0, kappa=1e-3, **kw)


def test_special_energies_closed_forms():
    se = special_energies(P(0.3))
    assert se.E_min == pytest.approx(-(0.7**2))
    assert se.E_D == pytest.approx(-(1.3**2))
    assert se.omega_min == pytest.approx(2 * math.sqrt(0.7))
    ch, sh = cosh_sinh_beta(P(0.3))
    assert ch == pytest.approx(math.cosh(se.beta), rel=1e-14)
    assert sh == pytest.approx(math.sinh(se.beta), rel=1e-14)


def test_well_bottom_is_stationary():
    pr = P(0.3)
    se = special_energies(pr)
    phi0 = 1j * math.sqrt(2 * (2 * pr.lam - pr.delta) / pr.g)
    assert H0(np.conj(phi0), phi0, pr).real == pytest.approx(se.E_min, rel=1e-14)


@pytest.mark.parametrize("d", [0.3, -0.4, 0.6])
@pytest.mark.parametrize("frac", [0.1, 0.5, 0.95])
def test_trajectory_conserves_energy_and_is_periodic(d, frac):
    pr = P(d)
    se = special_energies(pr)
    E = se.E_min * (1 - frac)
    ct = char_times(E, pr)
    t = np.linspace(0, ct.t1, 57)
    phi = classical_solution(t, E, pr)
    assert np.max(np.abs(H0(np.conj(phi), phi, pr) - E)) < 1e-11
    assert abs(classical_solution(ct.t1, E, pr) - phi[0]) < 1e-10
    # Hamilton's equation i dphi/dt = dH/dphi_bar by central differences
    h = 1e-5
    dphi = (classical_solution(t + h, E, pr) - classical_solution(t - h, E, pr)) / (2 * h)
    rhs = pr.delta * phi + 2 * pr.lam * np.conj(phi) + 0.5 * pr.g * np.conj(phi) * phi**2
    assert np.max(np.abs(1j * dphi - rhs)) < 1e-7


@pytest.mark.parametrize("d", [0.3, -0.4])
def test_t1_matches_quadrature(d):
    pr = P(d)
    se = special_energies(pr)
    E = 0.6 * se.E_min
    # period as the time to go around the orbit, from Hamilton's equations in (Q, P)
    ct = char_times(E, pr)
    from scipy.integrate import solve_ivp

    def rhs(_, z):
        phi = (z[0] + 1j * z[1]) / math.sqrt(2)
        dphi = -1j * (pr.delta * phi + 2 * pr.lam * np.conj(phi) + 0.5 * pr.g * np.conj(phi) * phi**2)
        return [math.sqrt(2) * dphi.real, math.sqrt(2) * dphi.imag]

    phi0 = classical_solution(0.0, E, pr)
    z0 = [math.sqrt(2) * phi0.real, math.sqrt(2) * phi0.imag]
    sol = solve_ivp(rhs, (0, ct.t1), z0, rtol=1e-12, atol=1e-12)
    assert np.allclose(sol.y[:, -1], z0, atol=1e-8)
    half = solve_ivp(rhs, (0, ct.t1 / 2), z0, rtol=1e-12, atol=1e-12)
    assert np.linalg.norm(half.y[:, -1] - z0) > 1e-2


def test_second_period_and_symmetry_shift():
    pr = P(0.3)
    E = 0.5 * special_energies(pr).E_min
    ct = char_times(E, pr)
    # tS = (t1 + t2)/2 and sn has periods t1, t2 through the same lattice
    assert abs(ct.tS - 0.5 * (ct.t1 + ct.t2)) < 1e-12 * abs(ct.t2)
    t = np.array([0.3, 1.1])
    a = classical_solution(t, E, pr)
    b = classical_solution(t + ct.t2, E, pr)
    assert np.max(np.abs(a - b)) < 1e-8


def test_domain_and_divergences():
    pr = P(0.3)
    with pytest.raises(DomainError):
        char_times(0.1, pr)
    with pytest.raises(DomainError):
        char_times(2 * special_energies(pr).E_min, pr)
    prn = P(-0.4)
    with pytest.raises(DivergenceError):
        char_times(special_energies(prn).E_D, prn)
    bottom = char_times(special_energies(pr).E_min, pr)
    assert bottom.t1 == pytest.approx(2 * math.pi / special_energies(pr).omega_min)
    assert math.isinf(bottom.t2.imag)


def test_params_validation():
    with pytest.raises(ValidationError):
        OscParams(delta=1.2, lam=0.5, g=1.0)
    with pytest.raises(ValidationError):
        OscParams(delta=0.3, lam=0.5, g=1.0, kappa=-1)
    with pytest.raises(ValidationError):
        OscParams(delta=0.3, lam=0.5, g=1.0, T=1.0, n_B=1.0)
