import numpy as np
import pytest
from scipy.integrate import quad

from numrh import rhsolver as rh
from numrh.chebcore import IntervalMap


def leg_quad(f, a, b, z):
    """(1/2 pi i) int_a^b f(t)/(t - z) dt along the segment."""
    d = b - a

    def g(s, part):
        t = a + s * d
        v = f(t) * d / (t - z) / (2j * np.pi)
        return v.real if part == 0 else v.imag

    return quad(g, 0, 1, args=(0,), epsabs=1e-14)[0] + 1j * quad(g, 0, 1, args=(1,), epsabs=1e-14)[0]


def diag_problem():
    # high-order zeros at the ends keep C f smooth enough for near-spectral convergence
    f = lambda t: 0.5 * (1 - t**2) ** 4 * (1 + 0.3 * t)

    def jump(i, z):
        e = f(np.real(z))
        G = np.zeros((len(z), 2, 2), dtype=complex)
        G[:, 0, 0], G[:, 1, 1] = np.exp(e), np.exp(-e)
        return G

    return rh.RHProblem([rh.ContourLeg.segment(-1, 1)], jump, "diag"), f


def test_diagonal_jump_oracle():
    prob, f = diag_problem()
    sol = rh.solve(prob, 40)
    for z in (0.3 + 0.4j, -2.0 + 0.0j, 1.5 - 1j):
        ref = np.exp(leg_quad(f, -1.0, 1.0, z))
        got = sol.evaluate(np.array([z]))[0]
        assert abs(got[0, 0] - ref) < 1e-12
        assert abs(got[1, 1] - 1 / ref) < 1e-12
        assert abs(got[0, 1]) < 1e-13
    assert rh.jump_residual(sol) < 1e-12


def star_problem(c=(1.0, -0.4 + 0.5j, -0.6 - 0.5j), L=2.0):
    angles = (0.0, 2 * np.pi / 3, 4 * np.pi / 3)
    legs = [rh.ContourLeg.segment(0, L * np.exp(1j * a)) for a in angles]

    def weight(k, t):
        return c[k] * (1 - np.abs(t) / L) ** 2 * np.exp(-np.abs(t))

    def jump(i, z):
        G = np.tile(np.eye(2, dtype=complex), (len(z), 1, 1))
        G[:, 1, 0] = weight(i, z)
        return G

    return rh.RHProblem(legs, jump, "star"), legs, weight


def test_junction_lower_triangular_oracle():
    prob, legs, weight = star_problem()
    rh.check_jumps(prob)
    sol = rh.solve(prob, 30)
    for z in (0.5 + 0.2j, -1.0 + 0.1j, 0.1 - 0.7j, 3.0):
        ref = sum(leg_quad(lambda t, k=k: weight(k, t), leg.imap.a, leg.imap.b, z) for k, leg in enumerate(legs))
        got = sol.evaluate(np.array([z]))[0]
        assert abs(got[1, 0] - ref) < 1e-10
        assert abs(got[0, 1]) < 1e-13


def test_inconsistent_junction_rejected():
    prob, _, _ = star_problem(c=(1.0, 0.2, 0.3))
    with pytest.raises(rh.JumpConsistencyError):
        rh.check_jumps(prob)
    with pytest.raises(rh.JumpConsistencyError):
        rh.solve(prob, 20)


def test_find_junctions():
    _, legs, _ = star_problem()
    js = rh.find_junctions(legs)
    sizes = sorted(len(j.members) for j in js)
    assert sizes == [1, 1, 1, 3]


def test_moment_matches_large_z():
    prob, _ = diag_problem()
    sol = rh.solve(prob, 40)
    z = 1e5
    approx = z * (sol.evaluate(np.array([z]))[0] - np.eye(2))
    np.testing.assert_allclose(approx, sol.moment(), atol=1e-4)


def test_cauchy_error_decreases():
    prob, _, _ = star_problem()
    e1 = rh.cauchy_error(prob, 8)
    e2 = rh.cauchy_error(prob, 16)
    assert e2 < e1 and e2 < 1e-10
    assert rh.min_nodes(prob, 1e-10, candidates=range(8, 40, 4)) <= 16


def test_truncate_drops_identity_legs():
    def jump(i, z):
        G = np.tile(np.eye(2, dtype=complex), (len(z), 1, 1))
        G[:, 0, 1] = np.exp(-10 * np.real(z) ** 2) if i == 0 else 0
        return G

    prob = rh.RHProblem([rh.ContourLeg.segment(-5, 5), rh.ContourLeg.segment(10j, 12j)], jump)
    t = rh.truncate(prob, 1e-14)
    assert len(t.legs) == 1
    assert t.legs[0].imap.length < 5


def test_scaled_solve_of_two_pieces():
    prob_a, f = diag_problem()
    shifted = lambda i, z: prob_a.jump(i, z - 10)
    prob_b = rh.RHProblem([rh.ContourLeg.segment(9, 11)], shifted)
    single = rh.solve(prob_a, 30)
    pieces = [(prob_a, 1.0, 0.0), (prob_b, 1.0, 0.0)]
    prod = rh.scaled_solve(pieces, 30)
    # the pieces do not interact: Phi = Phi_b Phi_a, both diagonal
    z = np.array([4.0 + 1j])
    a = single.evaluate(z)[0]
    b = single.evaluate(z - 10)[0]
    np.testing.assert_allclose(prod.evaluate(z)[0], b @ a, atol=1e-12)


def test_singular_leg_count():
    prob, _ = diag_problem()
    with pytest.raises(ValueError):
        rh.solve(prob, [10, 10])
