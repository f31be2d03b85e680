"""Airy local parametrices at soft edges, used to validate the deformation.

For an even potential with support [-b, b] the parametrix at the right edge is

    psi_b(z) = N(z) P(z),  P = sqrt(pi) e^{i pi/6} M s^{sigma3/4} Psi(s) e^{nh sigma3/2},

with s = n^{2/3} lambda(z), lambda = ((3/4) h)^{2/3} conformal at b and
M = [[1, -1], [-i, -i]].  P -> I away from b, so psi_b N^{-1} = I + O(1/n) on
the disk boundary.  The left edge is obtained by reflection.  The remaining
problem for E = T psi^{-1} has jumps close to the identity everywhere.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import airy as _scipy_airy

from . import rhsolver as rh
from .equilibrium import EquilibriumMeasure, equilibrium_measure
from .oprh import _h, build_phi_problem, global_parametrix

OMEGA = np.exp(2j * np.pi / 3)
SIGMA3 = np.diag([1.0, -1.0]).astype(complex)
M_AIRY = np.array([[1, -1], [-1j, -1j]])

# disk sector -> Psi sector, and the reflected sector used for the left edge
PSI_SECTOR = {"A": 1, "B": 2, "C": 3, "D": 4}
REFLECT = {"I": "D", "II": "A", "III": "C", "IV": "B"}


class UnsupportedPotentialError(ValueError):
    pass


def airy(z):
    """(Ai(z), Ai'(z)) for complex z."""
    ai, aip, _, _ = _scipy_airy(np.asarray(z, dtype=complex))
    return ai, aip


def _sector_of(s):
    ang = np.mod(np.angle(s), 2 * np.pi)
    return np.where(ang < 2 * np.pi / 3, 1, np.where(ang < np.pi, 2, np.where(ang < 4 * np.pi / 3, 3, 4)))


def build_psi(s, sector=None):
    """Model solution Psi(s) with jumps on the rays arg s = 0, 2pi/3, pi, 4pi/3.

    Each sector uses the pair of Airy solutions that is recessive or balanced
    there, so the columns can be continued past the sector edges without
    cancellation.  ``sector`` (1..4) overrides the sector read from arg s.
    """
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    k = np.broadcast_to(_sector_of(s) if sector is None else np.asarray(sector), s.shape)
    a0, d0 = airy(s)
    a1, d1 = airy(OMEGA * s)
    a2, d2 = airy(OMEGA**2 * s)
    y0 = np.stack([a0, d0], -1)
    y1 = np.stack([a1, OMEGA * d1], -1)
    y2 = np.stack([a2, OMEGA**2 * d2], -1)
    em, ep = np.exp(-1j * np.pi / 6), np.exp(1j * np.pi / 6)
    c0 = np.where((k == 1) | (k == 4), 1, 0)[:, None] * em * y0
    c0 = c0 + np.where(k == 2, -1j, 0)[:, None] * y1 + np.where(k == 3, ep, 0)[:, None] * y2
    c1 = np.where(k <= 2, ep, 0)[:, None] * y2 + np.where(k >= 3, 1j, 0)[:, None] * y1
    return np.stack([c0, c1], -1)


PSI_JUMPS = {
    # ray angle -> (jump, orientation): +1 outward from 0, -1 towards 0
    0.0: (np.array([[1, 1], [0, 1]], dtype=complex), 1),
    2 * np.pi / 3: (np.array([[1, 0], [1, 1]], dtype=complex), -1),
    np.pi: (np.array([[0, 1], [-1, 0]], dtype=complex), -1),
    4 * np.pi / 3: (np.array([[1, 0], [1, 1]], dtype=complex), -1),
}


def psi_jump_residual(radius, angle):
    """||Psi_+ - Psi_- J|| on the ray at ``angle`` (sectors chosen on each side)."""
    J, orient = PSI_JUMPS[angle]
    s = radius * np.exp(1j * angle)
    k_ccw = {0.0: 1, 2 * np.pi / 3: 2, np.pi: 3, 4 * np.pi / 3: 4}[angle]
    k_cw = {0.0: 4, 2 * np.pi / 3: 1, np.pi: 2, 4 * np.pi / 3: 3}[angle]
    # for an outward ray the plus (left) side is the counterclockwise one
    kp, km = (k_ccw, k_cw) if orient > 0 else (k_cw, k_ccw)
    Pp = build_psi(s, kp)[0]
    Pm = build_psi(s, km)[0]
    return float(np.max(np.abs(Pp - Pm @ J)))


@dataclass
class ParametrixSet:
    """Local Airy parametrices at both soft edges of an even potential."""

    eqm: EquilibriumMeasure
    n: int
    radius: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def b(self):
        return self.eqm.b

    def h(self, z, side=+1):
        return _h(self.eqm, self.n, z, side)

    def lam(self, z, side=+1):
        """lambda(z) = (z - b) ((3/4) h(z) (z - b)^{-3/2})^{2/3}; the bracket is analytic at b."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        d = z - self.b
        logd = np.log(d)
        real_left = (z.imag == 0) & (z.real < self.b)
        logd = np.where(real_left, np.log(np.abs(d)) + 1j * np.pi * np.sign(side), logd)
        ratio = 0.75 * self.h(z, side) * np.exp(-1.5 * logd)
        return d * ratio ** (2 / 3)

    def dlam(self, step=1e-5):
        """lambda'(b) by a centred difference across the edge."""
        zb = self.b + step * np.array([1.0, -1.0])
        lp = self.lam(zb[:1])[0]
        lm = self.lam(zb[1:])[0]
        return (lp - lm) / (2 * step)

    def P(self, z, sector):
        """Correction P with psi_b = N P; ``sector`` is a right-edge label A..D."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        side = 1 if sector in ("A", "B") else -1
        s = self.n ** (2 / 3) * self.lam(z, side)
        on_cut = (z.imag == 0) & (z.real < self.b)
        q = np.where(on_cut, np.abs(s) ** 0.25 * np.exp(0.25j * np.pi * side), s**0.25)
        Psi = build_psi(s, PSI_SECTOR[sector])
        D = np.zeros((len(z), 2, 2), dtype=complex)
        D[:, 0, 0], D[:, 1, 1] = q, 1 / q
        hh = self.n * self.h(z, side)
        Ex = np.zeros_like(D)
        Ex[:, 0, 0], Ex[:, 1, 1] = np.exp(hh / 2), np.exp(-hh / 2)
        return np.sqrt(np.pi) * np.exp(1j * np.pi / 6) * (M_AIRY @ D @ Psi @ Ex)

    def psi(self, z, sector):
        """psi_b(z) for right labels A..D, psi_{-b}(z) for left labels I..IV.

        The left one is N(z) sigma3 P(-z) sigma3, the reflection of psi_b with
        the outer factor evaluated at z itself.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if sector in PSI_SECTOR:
            side = 1 if sector in ("A", "B") else -1
            return global_parametrix(z, -self.b, self.b, side) @ self.P(z, sector)
        rs = REFLECT[sector]
        side = 1 if sector in ("I", "III") else -1
        Pm = SIGMA3 @ self.P(-z, rs) @ SIGMA3
        return global_parametrix(z, -self.b, self.b, side) @ Pm

    def matching_error(self, samples=64):
        """max ||psi N^{-1} - I|| over both disk circles."""
        worst = 0.0
        t = 2 * np.pi * (np.arange(samples) + 0.5) / samples
        for c, labels in ((self.b, "ABCD"), (-self.b, ("III", "I", "II", "IV"))):
            z = c + self.radius * np.exp(1j * t)
            ang = np.mod(t, 2 * np.pi)
            th = np.pi / 3 if c < 0 else 2 * np.pi / 3
            idx = np.where(ang < th, 0, np.where(ang < np.pi, 1, np.where(ang < 2 * np.pi - th, 2, 3)))
            for j, lab in enumerate(labels):
                sel = idx == j
                if not np.any(sel):
                    continue
                zs = z[sel]
                side = 1 if j < 2 else -1
                N = global_parametrix(zs, -self.b, self.b, side)
                R = self.psi(zs, lab) @ np.linalg.inv(N)
                worst = max(worst, float(np.max(np.abs(R - np.eye(2)))))
        return worst


def _even_check(potential):
    spec = getattr(potential, "spec", {}) or {}
    poly = spec.get("poly")
    if poly is None or any(abs(c) > 0 for c in poly[1::2]):
        raise UnsupportedPotentialError("Airy parametrices are implemented for even polynomial V only")


def build_local_parametrix(potential="gue", n=40, radius_factor=0.25):
    """ParametrixSet for an even polynomial potential; disks of radius radius_factor * b."""
    eqm = equilibrium_measure(potential)
    _even_check(eqm.potential)
    if abs(eqm.a + eqm.b) > 1e-10:
        raise UnsupportedPotentialError("support is not symmetric")
    return ParametrixSet(eqm, int(n), radius_factor * eqm.b)


def error_problem(potential="gue", n=40, radius_factor=0.25, trunc_tol=0.0):
    """RH problem for E = T psi^{-1} (inside the disks) and T N^{-1} (outside).

    Returns (problem, geometry, infos, parametrix set).  With trunc_tol = 0
    every leg is kept: four chords per disk, four lens segments and two rays.
    """
    ps = build_local_parametrix(potential, n, radius_factor)

    def local(disk, sector, z, side):
        return ps.psi(z, str(sector))

    prob, geo, infos, _ = build_phi_problem(
        ps.eqm.potential, n, ps.eqm, trunc_tol=trunc_tol, local=local, radius=ps.radius
    )
    return prob, geo, infos, ps


def jump_deviation(problem, per_leg=32):
    """max ||J - I|| over the contour."""
    worst = 0.0
    for i, leg in enumerate(problem.legs):
        t = np.linspace(-1, 1, per_leg)
        G = problem.jump_at(i, leg.imap.inverse(t))
        worst = max(worst, float(np.max(np.abs(G - np.eye(2)))))
    return worst


def recover_T(solution, ps, z):
    """T = E N at points outside the disks and the lenses."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    return solution.evaluate(z, +1) @ global_parametrix(z, -ps.b, ps.b)


def cauchy_error_experiment(ns, potential="gue", m=10):
    """Rows (n, max |U_m - U_2m|) for the E problem, with U sampled at the 2m-point nodes."""
    rows = []
    for n in ns:
        prob = error_problem(potential, n)[0]
        rows.append((int(n), rh.cauchy_error(prob, m)))
    return rows


__all__ = [
    "airy",
    "build_psi",
    "psi_jump_residual",
    "ParametrixSet",
    "build_local_parametrix",
    "error_problem",
    "jump_deviation",
    "recover_T",
    "cauchy_error_experiment",
    "UnsupportedPotentialError",
]
