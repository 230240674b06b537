import numpy as np
import pytest

from pslip import DriveParams, EffectiveHamiltonian, OscParams, WellGeometry, convergence_radii, noise_kernel
from pslip.errors import ConvergenceError, DomainError, ValidationError
from pslip.keldysh import strip


def H_of(ratio=0.3, mode="quantum", **kw):
    pr = OscParams(delta=ratio, lam=0.5, g=1.0, kappa=1e-3, **kw)
    return EffectiveHamiltonian(WellGeometry(pr, 64), mode)


def test_mode_validated():
    with pytest.raises(ValidationError):
        H_of(mode="semiclassical")


@pytest.mark.parametrize("kw", [{"n_B": 0.0}, {"n_B": 0.7}])
def test_K0_vanishes_on_p_zero(kw):
    H = H_of(**kw)
    I = np.linspace(0.05, 0.95, 7) * H.geometry.I_top
    assert np.max(np.abs(H.K0(I, np.zeros_like(I)))) < 1e-16


@pytest.mark.parametrize("kw", [{"n_B": 0.0}, {"n_B": 0.7}])
def test_p_derivatives_by_differences(kw):
    H = H_of(**kw)
    I = 0.4 * H.geometry.I_top
    p, h = 0.3, 1e-5
    fd1 = (H.K0(I, p + h) - H.K0(I, p - h)) / (2 * h)
    fd2 = (H.K0(I, p + h) - 2 * H.K0(I, p) + H.K0(I, p - h)) / h**2
    assert H.dK0_dp(I, p) == pytest.approx(fd1, rel=1e-8)
    assert H.d2K0_dp2(I, p) == pytest.approx(fd2, rel=1e-4)
    assert H.d2K0_dp2(I, p) > 0


def test_zero_T_strip_is_asymmetric_and_enforced():
    H = H_of(n_B=0.0)
    I = 0.5 * H.geometry.I_top
    plt, pgt = convergence_radii(I, H.geometry)
    lo, hi = strip(H.geometry, I, zero_T=True)
    assert lo[0] == -plt and hi[0] == pgt
    with pytest.raises(ConvergenceError) as exc:
        H.K0(I, pgt)
    assert exc.value.bound == "upper"
    with pytest.raises(ConvergenceError):
        H.K0(I, -plt)
    H.K0(I, 0.99 * pgt)
    lo, hi = strip(H_of(n_B=0.1).geometry, I, zero_T=False)
    assert hi[0] == min(plt, pgt) and lo[0] == -hi[0]


def test_classical_form():
    H = H_of(T=2.0, mode="classical")
    I, p = 0.3 * H.geometry.I_top, 0.8
    D = 2 * 1e-3 * 2.0 / 1.0
    assert H.noise_strength == pytest.approx(D)
    assert H.K0(I, p) == pytest.approx(-2e-3 * p * I + D * noise_kernel(I, H.geometry) * p * p, rel=1e-14)


def test_quantum_tends_to_classical():
    H = H_of(n_B=200.0)
    I = 0.5 * H.geometry.I_top
    assert H.classical_limit_check(I, 0.002) < 5e-3
    with pytest.raises(DomainError):
        H_of(n_B=1.0).classical_limit_check(I, 0.1)


def test_integral_rep_complex_p_symmetry():
    H = H_of(n_B=0.5)
    I = 0.4 * H.geometry.I_top
    kl, kg = H.K0_integral_rep(I, 0.2)
    kl2, kg2 = H.K0_integral_rep(I, -0.2)
    assert kl == pytest.approx(kg2, rel=1e-12) and kg == pytest.approx(kl2, rel=1e-12)


def test_K1_scales_with_alpha_and_vanishes_without_drive():
    H = H_of(n_B=0.0)
    I = 0.3 * H.geometry.I_top
    a = H.K1(I, 0.4, 0.7, DriveParams(alpha=1e-3, nu=0.9))
    b = H.K1(I, 0.4, 0.7, DriveParams(alpha=2e-3, nu=0.9))
    assert b == pytest.approx(2 * a, rel=1e-13)
    assert H.K1(I, 0.4, 0.7, DriveParams(alpha=0.0, nu=0.9)) == 0.0
