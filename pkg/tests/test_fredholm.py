import numpy as np
import pytest

from numrh.fredholm import (
    DEFAULT_SEED,
    airy_det,
    empirical_gap,
    fredholm_det,
    gap_zscore,
    gue_sample,
    outer_kernel,
    sine_det,
    sine_kernel,
)


def test_rank_one_exact():
    f = np.polynomial.Polynomial([1.0, -0.5, 0.25])
    g = np.polynomial.Polynomial([0.3, 0.7])
    exact = 1 - ((f * g).integ()(1.2) - (f * g).integ()(-0.4))
    d = fredholm_det(outer_kernel(lambda x, y: f(x) * g(y)), (-0.4, 1.2), m=10)
    assert abs(d.value - exact) < 1e-13


def test_empty_interval():
    assert fredholm_det(outer_kernel(lambda x, y: x * y), (1.0, 1.0)).value == 1.0
    assert sine_det(0.0).value == 1.0


def test_sine_kernel_diagonal():
    x = np.array([0.2, 0.5])
    np.testing.assert_allclose(np.diag(sine_kernel(x, x)), 1.0)
    np.testing.assert_allclose(np.diag(sine_kernel(x, x, pi_scaled=False)), 1.0)
    off = sine_kernel(np.array([0.0]), np.array([0.5]))[0, 0]
    assert abs(off - np.sin(np.pi / 2) / (np.pi / 2)) < 1e-15


def test_sine_det_small_s_expansion():
    # E(0; s) = 1 - s + pi^2 s^4 / 36 + O(s^6) for the window of length s (unit density)
    s = 0.05
    d = sine_det(s / 2).value
    assert abs(d - (1 - s + np.pi**2 * s**4 / 36)) < 1e-8


def test_sine_det_monotone_in_unit_interval():
    vals = np.array([sine_det(s).value for s in np.linspace(0, 2, 9)])
    assert np.all(np.diff(vals) < 0) and np.all(vals > -1e-12) and vals[0] == 1


def test_tracy_widom_reference():
    # F2(-2) = 0.413224... (tabulated value of the GUE edge distribution)
    assert abs(airy_det(-2.0).value - 0.41322414250512257) < 1e-10
    assert abs(airy_det(-2.0).error) < 1e-12


def test_gue_sample_deterministic_and_scaled():
    a = gue_sample(20, 30)
    b = gue_sample(20, 30, DEFAULT_SEED)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, gue_sample(20, 30, DEFAULT_SEED + 1))
    # spectrum fills roughly [-sqrt 2, sqrt 2]
    assert 1.0 < np.mean(a.max(axis=1)) < 1.7


def test_empirical_gap_and_score():
    eigs = np.array([[0.5, 1.0], [-0.1, 2.0], [0.05, 3.0], [1.0, 2.0]])
    p, se = empirical_gap(eigs, -0.2, 0.2)
    assert p == 0.5 and abs(se - 0.25) < 1e-15
    assert gap_zscore(0.5, eigs, -0.2, 0.2) == 0
    # the score is defined even when no sample is empty
    assert np.isfinite(gap_zscore(1e-6, eigs, -10, 10))


def test_nonfinite_kernel_raises():
    with pytest.raises(FloatingPointError):
        fredholm_det(outer_kernel(lambda x, y: np.full(np.broadcast(x, y).shape, np.nan)), (0, 1))
