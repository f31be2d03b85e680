"""One-interval equilibrium measures for the external field V.

The support [a, b] is the root of F(a, b) = (V_0, (b - a) V_1 - 8), where V_k
are the Chebyshev-T coefficients of V' o M^{-1}.  With w = J_+^{-1}(M(z)) the
log-derivative of the measure is phi(z) = (1/2) sum V_k w^k, and g is its
term-by-term integral.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cauchy import inv_joukowski_boundary, inv_joukowski_exterior
from .chebcore import IntervalMap, _values_to_coeffs, cheb_points, chop

DEGENERATE_TOL = 1e-8


class SupportError(RuntimeError):
    def __init__(self, msg, last=None):
        super().__init__(msg)
        self.last = last


class DegenerateEdgeError(ValueError):
    pass


@dataclass(frozen=True)
class Potential:
    """External field V with first and second derivatives."""

    name: str
    V: Callable
    dV: Callable
    d2V: Callable | None = None
    spec: dict = field(default_factory=dict, compare=False)

    @classmethod
    def polynomial(cls, coeffs, name=None):
        """V(x) = sum coeffs[j] x^j."""
        p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))
        dp, d2p = p.deriv(), p.deriv(2)
        return cls(name or f"poly{list(coeffs)}", p, dp, d2p, {"poly": [float(c) for c in coeffs]})


def gue():
    return Potential.polynomial([0, 0, 1], "gue")


def degenerate_quartic():
    # measure vanishes like (b - x)^{5/2} at the right edge
    return Potential.polynomial([0, 8 / 5, 1 / 5, -4 / 15, 1 / 20], "degenerate-quartic")


def exp_linear():
    return Potential("exp-linear", lambda x: np.exp(x) - x, lambda x: np.exp(x) - 1, np.exp)


NAMED = {"gue": gue, "degenerate-quartic": degenerate_quartic, "exp-linear": exp_linear}


def named_potential(name):
    try:
        return NAMED[name]()
    except KeyError:
        raise ValueError(f"unknown potential {name!r}; choose from {sorted(NAMED)}") from None


def vk_coefficients(dV, a, b, m):
    """First m Chebyshev-T coefficients of V'(M^{-1}(t)) via the trapezium rule in theta."""
    imap = IntervalMap(float(a), float(b))
    vals = dV(np.real(cheb_points(m, imap)))
    return np.real(_values_to_coeffs(np.asarray(vals, dtype=float)))


def _F(dV, a, b, m):
    Vk = vk_coefficients(dV, a, b, m)
    return np.array([Vk[0], (b - a) * Vk[1] - 8.0])


def _coeff_count(dV, a, b, tol=1e-15, m=17, mmax=1025):
    # smallest doubling grid whose tail is negligible, with a safety margin
    while m < mmax:
        c = vk_coefficients(dV, a, b, m)
        if np.max(np.abs(c[-3:])) <= tol * max(np.max(np.abs(c)), 1.0):
            break
        m = 2 * (m - 1) + 1
    return m


def jacobian(dV, a, b, m, h=1e-7):
    """Forward-difference Jacobian of F with respect to (a, b)."""
    F0 = _F(dV, a, b, m)
    J = np.empty((2, 2))
    J[:, 0] = (_F(dV, a + h, b, m) - F0) / h
    J[:, 1] = (_F(dV, a, b + h, m) - F0) / h
    return J


def find_support(dV, initial=(-1.0, 1.0), tol=1e-12, maxit=50):
    """Newton iteration for the soft edges (a, b)."""
    a, b = map(float, initial)
    if not a < b:
        raise ValueError("need a0 < b0")
    # rescale the starting interval about its centre so that (b - a) V_1 = 8
    m = _coeff_count(dV, a, b)
    V1 = vk_coefficients(dV, a, b, m)[1]
    if V1 > 0:
        c, h = 0.5 * (a + b), 0.5 * (b - a)
        s = min(max(4.0 / (h * V1), 0.25), 4.0) ** 0.5
        a, b = c - s * h, c + s * h
    m = _coeff_count(dV, a, b)
    F = _F(dV, a, b, m)
    for _ in range(maxit):
        nF = np.linalg.norm(F)
        if nF < tol:
            return a, b
        step = np.linalg.solve(jacobian(dV, a, b, m), -F)
        lam = 1.0
        while True:
            na, nb = a + lam * step[0], b + lam * step[1]
            if nb > na:
                nFn = _F(dV, na, nb, m)
                if np.all(np.isfinite(nFn)) and (np.linalg.norm(nFn) < nF or lam < 1e-3):
                    break
            lam *= 0.5
            if lam < 1e-6:
                raise SupportError("Newton step could not be damped into b > a", (a, b))
        a, b, F = na, nb, nFn
        m = max(m, _coeff_count(dV, a, b))
        F = _F(dV, a, b, m)
    if np.linalg.norm(F) < tol:
        return a, b
    raise SupportError(f"no convergence in {maxit} iterations, |F| = {np.linalg.norm(F):.3g}", (a, b))


@dataclass(frozen=True)
class EquilibriumMeasure:
    potential: Potential
    a: float
    b: float
    Vk: np.ndarray = field(repr=False)
    ell: float = float("nan")

    @property
    def imap(self):
        return IntervalMap(self.a, self.b)

    def h_edge(self, end="R"):
        """sum k V_k (right edge) or sum k (-1)^{k-1} V_k (left); zero at a degenerate edge."""
        k = np.arange(len(self.Vk))
        s = 1.0 if end == "R" else -1.0
        return float(np.sum(k * s ** (k - 1) * self.Vk))

    def degenerate(self, end="R"):
        return abs(self.h_edge(end)) < DEGENERATE_TOL

    @property
    def c(self):
        try:
            return edge_constant(self)
        except DegenerateEdgeError:
            return float("nan")

    def density(self, x):
        return density(self, x)

    def g(self, z, side=+1):
        return g_eval(self, z, side)

    def phi(self, z, side=+1):
        return phi_eval(self, z, side)


def _w(eqm, z, side):
    # J_+^{-1}(M(z)), boundary values on (a, b) and on (-inf, a)
    z = np.asarray(z, dtype=complex)
    M = eqm.imap.forward(z)
    w = inv_joukowski_exterior(M)
    on = (np.abs(np.imag(M)) < 1e-14) & (np.abs(np.real(M)) <= 1)
    if np.any(on):
        sd = np.where(np.imag(M[on]) > 0, 1, np.where(np.imag(M[on]) < 0, -1, side))
        xr = np.real(M[on])
        w[on] = np.where(sd > 0, inv_joukowski_boundary(xr, 1), inv_joukowski_boundary(xr, -1))
    left = (np.abs(np.imag(M)) < 1e-14) & (np.real(M) < -1)
    if np.any(left):
        # w is real and negative there: keep the requested side for log w
        w[left] = np.real(w[left]) - 1j * side * 1e-300
    return w


def phi_eval(eqm, z, side=+1):
    """phi(z) = (1/2) sum_{k>=1} V_k w^k; boundary value from ``side`` on the support."""
    w = _w(eqm, z, side)
    Vk = np.asarray(eqm.Vk, dtype=float)
    return 0.5 * (np.polynomial.polynomial.polyval(w, np.concatenate([[0.0], Vk[1:]])))


def g_eval(eqm, z, side=+1):
    """g(z) = int log(z - s) d mu(s), principal branch; cut on (-inf, b]."""
    w = _w(eqm, z, side)
    Vk = np.asarray(eqm.Vk, dtype=float)
    s = Vk[1] * (w**2 / 2 - np.log(w)) if len(Vk) > 1 else 0 * w
    for k in range(2, len(Vk)):
        s = s + Vk[k] * (w ** (k + 1) / (k + 1) - w ** (k - 1) / (k - 1))
    return np.log((eqm.b - eqm.a) / 4) + (eqm.b - eqm.a) / 8 * s


def lagrange_ell(eqm, points=(-0.5, 0.0, 0.7), check=1e-6):
    """ell = V(x) - g+(x) - g-(x) at interior x (points given in mapped coordinates)."""
    x = eqm.imap.inverse(np.asarray(points, dtype=float)).real
    vals = eqm.potential.V(x) - np.real(g_eval(eqm, x, +1) + g_eval(eqm, x, -1))
    spread = float(np.ptp(vals))
    if spread >= check:
        raise SupportError(f"ell varies by {spread:.3g} across the support")
    return float(np.mean(vals))


def density(eqm, x):
    """psi(x) = sqrt(1 - M^2)/(2 pi) sum V_k U_{k-1}(M); zero outside [a, b]."""
    x = np.asarray(x, dtype=float)
    t = eqm.imap.forward(x).real
    inside = np.abs(t) <= 1
    tc = np.clip(t, -1, 1)
    Vk = np.asarray(eqm.Vk, dtype=float)
    # sum V_k U_{k-1}(t) via U_{k-1} = sin(k theta)/sin(theta); use the recurrence to avoid 0/0
    U = np.zeros((len(Vk),) + t.shape)
    if len(Vk) > 1:
        U[1] = 1.0
    if len(Vk) > 2:
        U[2] = 2 * tc
    for k in range(3, len(Vk)):
        U[k] = 2 * tc * U[k - 1] - U[k - 2]
    s = np.tensordot(Vk, U, axes=1)
    out = np.sqrt(np.maximum(1 - tc**2, 0)) / (2 * np.pi) * s
    return np.where(inside, out, 0.0)


def total_mass(eqm):
    """int psi dx by orthogonality of U_k: (b - a) V_1 / 8."""
    return float((eqm.b - eqm.a) * eqm.Vk[1] / 8)


def edge_constant(eqm, end="R"):
    """c = (b - a)^{-1/3} (h)^{2/3} with h = sum k V_k (or its left-edge analogue)."""
    h = eqm.h_edge(end)
    if abs(h) < DEGENERATE_TOL:
        raise DegenerateEdgeError(f"degenerate {end} edge (h = {h:.3g}); use the degenerate scaling")
    return float((eqm.b - eqm.a) ** (-1 / 3) * abs(h) ** (2 / 3))


def equilibrium_measure(potential, initial=(-1.0, 1.0), tol=1e-12):
    """Support, coefficients and Lagrange constant for a named or given potential."""
    if isinstance(potential, str):
        potential = named_potential(potential)
    a, b = find_support(potential.dV, initial, tol)
    m = _coeff_count(potential.dV, a, b)
    Vk = chop(vk_coefficients(potential.dV, a, b, m), 1e-15)
    Vk = np.array(Vk, dtype=float)
    Vk[0] = 0.0
    eqm = EquilibriumMeasure(potential, a, b, Vk)
    ell = lagrange_ell(eqm)
    return EquilibriumMeasure(potential, a, b, Vk, ell)


def mrs_numbers(eqm):
    return eqm.a, eqm.b


def exterior_exponent(eqm, x, side=+1):
    """g+(x) + g-(x) + ell - V(x) on the real line (negative off the support)."""
    x = np.asarray(x, dtype=float)
    gp = g_eval(eqm, x, +1)
    gm = g_eval(eqm, x, -1)
    return np.real(gp + gm) + eqm.ell - eqm.potential.V(x)


__all__ = [
    "Potential",
    "EquilibriumMeasure",
    "SupportError",
    "DegenerateEdgeError",
    "vk_coefficients",
    "find_support",
    "phi_eval",
    "g_eval",
    "density",
    "lagrange_ell",
    "edge_constant",
    "equilibrium_measure",
    "named_potential",
    "total_mass",
    "exterior_exponent",
]
