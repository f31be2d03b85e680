import numpy as np
import pytest
from scipy.special import airy

from numrh.painleve2 import (
    StokesError,
    StokesTriple,
    UnsupportedDeformationError,
    g_hm,
    ode_residual,
    pii,
    pii_negative_hm,
    pii_positive,
    pii_undeformed,
    regime,
    stokes_extend,
    theta,
)

HM_POS = StokesTriple.hastings_mcleod(-1)  # u ~ Ai(x) as x -> +inf


def test_constraint_enforced():
    with pytest.raises(StokesError):
        StokesTriple(1, 2, 3)
    s2 = 0.7 / 0.9
    StokesTriple(0.5, s2, 0.2)


def test_extension_and_cyclic_product():
    s = StokesTriple(0.5, 0.7 / 0.9, 0.2)
    ext = s.extended()
    assert ext[3:] == tuple(-v for v in ext[:3])
    G = stokes_extend(s, 0.0)
    # at lam = 0 all rays meet; the product of the six jumps is the identity
    P = np.eye(2, dtype=complex)
    for g in G:
        P = P @ g(np.array([0.0]))[0]
    np.testing.assert_allclose(P, np.eye(2), atol=1e-14)


def test_theta_stationary_points():
    # theta'(z) = 8 z^2 + 2 vanishes at +-i/2 for x > 0, and theta(i/2) = 2i/3
    assert abs(theta(0.5j) - 2j / 3) < 1e-15
    h = 1e-6
    assert abs((theta(0.5j + h) - theta(0.5j - h)) / (2 * h)) < 1e-8


def test_hastings_mcleod_at_zero():
    # u(0) for the Hastings-McLeod solution, 0.36706155154807...
    u = pii(HM_POS, 0.0)
    assert abs(u - 0.36706155154807) < 1e-12
    assert abs(pii(StokesTriple.hastings_mcleod(), 0.0) + u) < 1e-13


@pytest.mark.parametrize("x", [-1.0, 0.5, 2.0, 4.0])
def test_small_stokes_is_airy(x):
    # s1 = -s3 = -i k gives u = k Ai(x) + O(k^3)
    k = 1e-4
    u = pii(StokesTriple(-1j * k, 0, 1j * k), x)
    assert abs(u - k * airy(x)[0]) < 1e-10


def test_zero_triple():
    assert pii(StokesTriple(0, 0, 0), -20.0) == 0


def test_regime_overlaps():
    assert regime(0.0) == "undeformed" and regime(3.0) == "positive" and regime(-3.0) == "negative-HM"
    assert abs(pii_undeformed(HM_POS, 2.5, 60) - pii_positive(HM_POS, 2.5, 60)) < 1e-10
    assert abs(pii_undeformed(HM_POS, -2.5, 60) - pii_negative_hm(-1, -2.5, 60)) < 1e-9


def test_hm_real_and_positive():
    xs = (-6.0, -1.0, 1.0, 5.0)
    u = np.array([pii(HM_POS, x) for x in xs])
    assert np.all(np.abs(u.imag) < 1e-12) and np.all(u.real > 0)
    # Airy tail for large positive x
    assert abs(u[-1].real / airy(5.0)[0] - 1) < 1e-3


def test_ode_residual_general_triple():
    s = StokesTriple(0.5, 0.7 / 0.9, 0.2)
    for x in (-1.2, 0.3, 1.7):
        res, scale = ode_residual(lambda t: pii(s, t), x)
        assert res < 1e-6 * max(1.0, scale)


def test_unsupported_combinations():
    with pytest.raises(UnsupportedDeformationError):
        pii(StokesTriple(0.5, 0.7 / 0.9, 0.2), 4.0)
    with pytest.raises(UnsupportedDeformationError):
        pii(StokesTriple(-1j * 0.5, 0, 0.5j), -4.0)
    with pytest.raises(UnsupportedDeformationError):
        pii_undeformed(HM_POS, 3.0)


def test_g_function_behaviour():
    # g ~ (8/3) z^3 - 2 z + O(1/z) at infinity
    z = 50.0 + 30j
    assert abs(g_hm(z) - (8 / 3 * z**3 - 2 * z)) < 1e-2
