import numpy as np
import pytest
from scipy.integrate import quad

from numrh.cauchy import (
    cauchy_basis,
    cauchy_basis_boundary,
    cauchy_basis_junction,
    inv_joukowski_boundary,
    inv_joukowski_exterior,
    junction_table,
)
from numrh.chebcore import STANDARD, IntervalMap


def quad_cauchy(k, z):
    def f(t, part):
        v = np.cos(k * np.arccos(t)) / (t - z) / (2j * np.pi)
        return v.real if part == 0 else v.imag

    return quad(f, -1, 1, args=(0,), epsabs=1e-14, limit=200)[0] + 1j * quad(f, -1, 1, args=(1,), epsabs=1e-14, limit=200)[0]


def test_joukowski_inverse_inside_disk():
    z = np.array([3.0, -3.0, 2j, -1.5 - 0.0j, complex(-1.5, -0.0), 1e8 + 1j])
    w = inv_joukowski_exterior(z)
    assert np.all(np.abs(w) < 1)
    np.testing.assert_allclose(0.5 * (w + 1 / w), z, rtol=1e-12)


def test_joukowski_boundary_values():
    x = np.linspace(-0.9, 0.9, 7)
    for side in (+1, -1):
        w = inv_joukowski_boundary(x, side)
        np.testing.assert_allclose(np.abs(w), 1, atol=1e-14)
        np.testing.assert_allclose(0.5 * (w + 1 / w), x, atol=1e-14)
    # limit from above matches the side=+1 formula
    np.testing.assert_allclose(inv_joukowski_exterior(0.3 + 1e-12j), inv_joukowski_boundary(0.3, +1), atol=1e-6)


@pytest.mark.parametrize("k", [0, 1, 2, 7, 20])
def test_basis_against_quadrature(k):
    pts = np.array([0.3 + 0.5j, -1.4 + 0.1j, 2.5 - 0.2j, 0.01 - 0.05j])
    ref = np.array([quad_cauchy(k, z) for z in pts])
    np.testing.assert_allclose(cauchy_basis(k, STANDARD, pts), ref, atol=1e-11)


def test_large_z_decay():
    # C[T_k](z) = O(z^{-1}) with leading term -int T_k / (2 pi i z)
    z = 1e6
    for k in (0, 2, 4):
        integral = 2.0 / (1 - k * k)
        assert abs(cauchy_basis(k, STANDARD, z) + integral / (2j * np.pi * z)) < 1e-12
    assert abs(cauchy_basis(1, STANDARD, z)) < 1e-12


def test_plemelj_on_mapped_leg():
    im = IntervalMap(1j, 2 + 0.5j)
    t = np.linspace(-0.9, 0.9, 9)
    x = im.inverse(t)
    for k in range(6):
        jump = cauchy_basis_boundary(k, im, x, +1) - cauchy_basis_boundary(k, im, x, -1)
        np.testing.assert_allclose(jump, np.cos(k * np.arccos(t)), atol=1e-13)
    with pytest.raises(ValueError):
        cauchy_basis_boundary(0, im, im.a, +1)


def test_junction_table_matches_scalar():
    im = IntervalMap(-0.5, 1 + 1j)
    for end in "LR":
        tab = junction_table(12, im, end, 2.0)
        ref = [cauchy_basis_junction(k, im, end, 2.0) for k in range(12)]
        np.testing.assert_allclose(tab, ref, atol=1e-13)


def test_junction_along_leg_needs_side():
    with pytest.raises(ValueError):
        cauchy_basis_junction(0, STANDARD, "L", 0.0)
    a = cauchy_basis_junction(0, STANDARD, "L", 0.0, side=+1)
    b = cauchy_basis_junction(0, STANDARD, "L", 0.0, side=-1)
    # the two sides of the leg differ by the jump T_0 = 1
    assert abs(a - b - 1) < 1e-14


@pytest.mark.parametrize("k", [0, 1, 2, 5, 9])
def test_psi_formula_matches_recurrence(k):
    from numrh.cauchy import psi_k

    z = np.array([0.3 + 0.5j, -1.4 + 0.1j, 2.5 - 0.2j, 0.9 - 0.01j])
    w = inv_joukowski_exterior(z)
    ref = -0.5 * (psi_k(k, w) + psi_k(-k, w))
    np.testing.assert_allclose(cauchy_basis(k, STANDARD, z), ref, atol=1e-13)
