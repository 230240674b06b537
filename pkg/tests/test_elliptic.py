import math

import mpmath as mp
import numpy as np
import pytest

from pslip.elliptic import (
    POLE_THRESHOLD,
    agm,
    carlson_rf,
    complete_elliptic_K,
    incomplete_elliptic_F,
    inverse_cn,
    inverse_dn,
    jacobi_pq,
)
from pslip.errors import BranchCutError, DivergenceError, PoleError


def close(a, b, tol):
    return abs(complex(a) - complex(b)) <= tol * max(1.0, abs(complex(b)))


@pytest.mark.parametrize("m", [-50.0, -3.0, -0.2, 0.0, 1e-8, 0.3, 0.9, 0.999999])
def test_K_real_matches_mpmath(m):
    assert close(complete_elliptic_K(m), mp.ellipk(m), 1e-13)


@pytest.mark.parametrize("m", [0.5 + 0.5j, -2 + 3j, 4 - 1e-3j, 2.5 + 7j, 0.99 - 0.2j])
def test_K_complex_matches_mpmath(m):
    assert close(complete_elliptic_K(m), mp.ellipk(m), 1e-13)


def test_K_cut_sides():
    m = 3.0
    below = complete_elliptic_K(m, side="below")
    above = complete_elliptic_K(m, side="above")
    assert close(below, mp.ellipk(mp.mpc(m, -1e-30)), 1e-13)
    assert close(above, mp.ellipk(mp.mpc(m, 1e-30)), 1e-13)
    assert close(below, above.conjugate(), 1e-15)
    # negative zero imaginary part selects the lower side
    assert close(complete_elliptic_K(complex(m, -0.0)), below, 1e-15)


def test_K_cut_without_side_raises():
    with pytest.raises(BranchCutError):
        complete_elliptic_K(2.0)
    with pytest.raises(ValueError):
        complete_elliptic_K(2.0, side="left")


def test_K_diverges_at_one():
    with pytest.raises(DivergenceError):
        complete_elliptic_K(1.0)


def test_K_vectorised():
    m = np.array([-1.0, 0.1, 0.7])
    out = complete_elliptic_K(m)
    assert out.shape == (3,)
    assert all(close(o, mp.ellipk(v), 1e-13) for o, v in zip(out, m))


def test_agm_value():
    assert close(agm(1.0, math.sqrt(2.0)), mp.agm(1, mp.sqrt(2)), 1e-15)


@pytest.mark.parametrize(
    "u,m",
    [(0.3, 0.5), (1.7 + 0.4j, 0.8), (0.2 - 2.1j, 0.3), (5.0 + 0.1j, -2.0), (0.7 + 0.3j, 3.5), (1.1, 0.3 + 0.4j), (12.0, 0.6)],
)
def test_jacobi_matches_mpmath(u, m):
    sn, cn, dn = jacobi_pq(u, m)
    for got, name in ((sn, "sn"), (cn, "cn"), (dn, "dn")):
        ref = mp.ellipfun(name, u, m=m)
        assert close(got, ref, 1e-11), (name, got, ref)


def test_jacobi_identities_on_grid():
    u = np.linspace(-3, 3, 41) + 0.7j
    sn, cn, dn = jacobi_pq(u, 0.64)
    assert np.max(np.abs(sn**2 + cn**2 - 1)) < 1e-12
    assert np.max(np.abs(dn**2 + 0.64 * sn**2 - 1)) < 1e-12


def test_jacobi_pole():
    m = 0.4
    Kp = float(mp.ellipk(1 - m))
    with pytest.raises(PoleError) as exc:
        jacobi_pq(1j * Kp, m)
    assert abs(exc.value.pole - 1j * Kp) < 1e-12
    # just outside the threshold is fine
    jacobi_pq(1j * Kp + 1e-3, m)
    assert POLE_THRESHOLD == 1e-6


@pytest.mark.parametrize("xyz", [(1.0, 2.0, 3.0), (0.0, 1.0, 4.0), (1 + 1j, 2 - 1j, 0.5), (1e-3, 10.0, 2.0)])
def test_carlson_rf(xyz):
    assert close(carlson_rf(*xyz), mp.elliprf(*xyz), 1e-13)


@pytest.mark.parametrize("phi,m", [(0.3, 0.5), (1.2, 0.99), (math.pi / 2, 0.2), (0.8, -4.0), (0.4, 3.0)])
def test_incomplete_F(phi, m):
    assert close(incomplete_elliptic_F(phi, m), mp.ellipf(phi, m), 1e-13)


def test_inverse_functions_round_trip():
    m = 0.7
    for x in (0.05, 0.4, 0.9):
        u = inverse_cn(x, m)
        assert close(mp.ellipfun("cn", u, m=m), x, 1e-13)
    for x in (math.sqrt(0.3) + 0.01, 0.8, 0.99):
        u = inverse_dn(x, m)
        assert close(mp.ellipfun("dn", u, m=m), x, 1e-12)
