import numpy as np
import pytest

from numrh.airyval import (
    PSI_JUMPS,
    UnsupportedPotentialError,
    build_local_parametrix,
    build_psi,
    error_problem,
    jump_deviation,
    psi_jump_residual,
)


@pytest.mark.parametrize("angle", sorted(PSI_JUMPS))
@pytest.mark.parametrize("radius", [0.3, 1.0, 4.0])
def test_psi_jumps(angle, radius):
    assert psi_jump_residual(radius, angle) < 1e-12


def test_psi_unimodular():
    s = np.array([0.5 + 0.2j, -1.0 + 0.3j, -0.4 - 2j, 2 - 1j])
    d = np.linalg.det(build_psi(s))
    # the Wronskians of the Airy pairs agree, so det Psi is one constant in all sectors
    np.testing.assert_allclose(d, d[0], rtol=1e-10)
    assert abs(abs(d[0]) - 1 / (2 * np.pi)) < 1e-12


def test_lambda_conformal_at_edge():
    ps = build_local_parametrix("gue", 40)
    # V = x^2: h ~ (4/3) 2^{3/4} (z - b)^{3/2}, so lambda'(b) = sqrt 2
    assert abs(ps.dlam() - np.sqrt(2)) < 1e-6


def test_matching_error_scales_like_one_over_n():
    e = [n * build_local_parametrix("gue", n).matching_error() for n in (40, 160)]
    assert abs(e[0] - e[1]) < 0.05 * e[1]


def test_error_problem_is_near_identity():
    prob, geo, infos, ps = error_problem("gue", 60)
    assert jump_deviation(prob) < 0.05


def test_non_even_potential_rejected():
    with pytest.raises(UnsupportedPotentialError):
        build_local_parametrix("exp-linear")
    with pytest.raises(UnsupportedPotentialError):
        build_local_parametrix("degenerate-quartic")
