import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from numrh.chebcore import IntervalMap, adaptive_cheb, cheb_diff, cheb_points, cheb_transform, chop, clenshaw

finite = st.floats(-5, 5, allow_nan=False)


@given(finite, finite, finite, finite, st.floats(-1, 1))
@settings(max_examples=60, deadline=None)
def test_map_roundtrip(ar, ai, br, bi, t):
    a, b = complex(ar, ai), complex(br, bi)
    if abs(a - b) < 1e-3:
        return
    im = IntervalMap(a, b)
    assert abs(im.forward(im.inverse(t)) - t) < 1e-12
    assert abs(im.forward(a) + 1) < 1e-12 and abs(im.forward(b) - 1) < 1e-12


def test_degenerate_interval():
    with pytest.raises(ValueError):
        IntervalMap(1.0, 1.0)


def test_points_symmetric_with_endpoints():
    x = cheb_points(9)
    assert x[0] == -1 and x[-1] == 1 and x[4] == 0
    np.testing.assert_array_equal(x, -x[::-1])
    with pytest.raises(ValueError):
        cheb_points(1)


@pytest.mark.parametrize("m", [2, 5, 16, 33])
def test_transform_recovers_polynomial(m):
    rng = np.random.default_rng(m)
    c = rng.normal(size=m) + 1j * rng.normal(size=m)
    x = cheb_points(m)
    vals = np.polynomial.chebyshev.chebval(x, c)
    np.testing.assert_allclose(cheb_transform(vals).coeffs, c, atol=1e-12)


def test_clenshaw_matrix_valued():
    rng = np.random.default_rng(1)
    c = rng.normal(size=(7, 2, 2))
    x = np.linspace(-1, 1, 5)
    got = clenshaw(c, x)
    for i, j in np.ndindex(2, 2):
        np.testing.assert_allclose(got[:, i, j], np.polynomial.chebyshev.chebval(x, c[:, i, j]), atol=1e-13)


def test_mapped_derivative():
    im = IntervalMap(0.5, 2.0)
    s = adaptive_cheb(np.sin, im)
    z = np.linspace(0.6, 1.9, 7)
    np.testing.assert_allclose(s(z), np.sin(z), atol=1e-14)
    np.testing.assert_allclose(cheb_diff(s)(z), np.cos(z), atol=1e-12)


def test_chop_keeps_leading():
    assert len(chop(np.array([1.0, 0.5, 1e-18, 0.0]))) == 2
    assert len(chop(np.zeros(4))) == 1
