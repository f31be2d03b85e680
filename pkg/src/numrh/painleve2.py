"""Painleve II, u'' = x u + 2 u^3, from its six-ray RH problem.

Phi has jumps on the rays arg lam = pi(k/3 - 1/6), k = 1..6, oriented away
from the origin: [[1, 0], [s_k e^{i theta}, 1]] for odd k and
[[1, s_k e^{-i theta}], [0, 1]] for even k, theta = (8/3) lam^3 + 2 x lam, and
u(x) = 2 lim lam Phi_12(lam).

Three regimes are implemented:
  * small |x|: the rays themselves, truncated where the jumps are negligible;
  * x > 0 with s2 = 0: lam = sqrt(x) z, the rays collapse onto the
    horizontal lines Im z = +-1/2 through the stationary points +-i/2;
  * x < 0 with s1 = -s3 = +-i, s2 = 0 (Hastings-McLeod): lam = sqrt(|x|) z,
    conjugation by e^{i|x|^{3/2}(g - theta) sigma3/2} with
    g = (8/3)(z^2 - 1/2)^{3/2}, an outer parametrix on [-alpha, alpha] and
    disks of radius 1/|x| around +-alpha.
"""

from dataclasses import dataclass

import numpy as np

from . import rhsolver as rh
from .chebcore import IntervalMap
from .oprh import split_pieces

ALPHA = 1 / np.sqrt(2)
SWITCH = 2.5  # |x| at which the deformed problems take over
TRUNC = 1e-16
I2 = np.eye(2, dtype=complex)


class UnsupportedDeformationError(ValueError):
    pass


class StokesError(ValueError):
    pass


@dataclass(frozen=True)
class StokesTriple:
    s1: complex
    s2: complex
    s3: complex

    def __post_init__(self):
        r = self.s1 - self.s2 + self.s3 + self.s1 * self.s2 * self.s3
        if abs(r) > 1e-12:
            raise StokesError(f"s1 - s2 + s3 + s1 s2 s3 = {r:.3g}, not 0")

    @classmethod
    def hastings_mcleod(cls, sign=+1):
        return cls(sign * 1j, 0, -sign * 1j)

    @property
    def is_hastings_mcleod(self):
        return self.s2 == 0 and abs(abs(self.s1) - 1) < 1e-14 and abs(self.s1.real) < 1e-14 and self.s3 == -self.s1

    def extended(self):
        """(s1, ..., s6) with s_{k+3} = -s_k."""
        s = (complex(self.s1), complex(self.s2), complex(self.s3))
        return s + tuple(-v for v in s)


def _as_triple(s):
    return s if isinstance(s, StokesTriple) else StokesTriple(*s)


def _lower(v):
    J = np.tile(I2, (len(v), 1, 1))
    J[:, 1, 0] = v
    return J


def _upper(v):
    J = np.tile(I2, (len(v), 1, 1))
    J[:, 0, 1] = v
    return J


def theta_undeformed(lam, x):
    return 8 / 3 * lam**3 + 2 * x * lam


def theta(z, sign=+1):
    """Rescaled phase (8/3) z^3 + 2 sign(x) z; stationary points z = +-i/2 for x > 0."""
    return 8 / 3 * np.asarray(z) ** 3 + 2 * sign * np.asarray(z)


def stokes_extend(s, x):
    """Six jump evaluators G_k(lam) (lam on ray k) for the undeformed problem."""
    s = _as_triple(s)
    ss = s.extended()

    def make(k):
        sk = ss[k - 1]
        if k % 2:
            return lambda lam: _lower(sk * np.exp(1j * theta_undeformed(lam, x)))
        return lambda lam: _upper(sk * np.exp(-1j * theta_undeformed(lam, x)))

    return [make(k) for k in range(1, 7)]


def _solve(problem, m, scaled=True):
    if not problem.legs:
        return None
    if scaled:
        pieces = split_pieces(problem)
        return rh.scaled_solve(pieces, m)
    return rh.solve(problem, m)


def _ray_length(x):
    # e^{-(8/3) t^3 + |x| t} is far below 1e-16 at the tip
    return 3.0 + np.sqrt(abs(x))


def undeformed_problem(s, x):
    s = _as_triple(s)
    G = stokes_extend(s, x)
    L = _ray_length(x)
    legs = []
    for k in range(1, 7):
        d = np.exp(1j * np.pi * (k / 3 - 1 / 6))
        legs.append(rh.ContourLeg(IntervalMap(0j, L * d)))

    def jump(i, z):
        return G[i](np.asarray(z, dtype=complex))

    return rh.truncate(rh.RHProblem(legs, jump, f"PII undeformed x={x}"), TRUNC)


def pii_undeformed(s, x, m=40):
    """u(x) from the six-ray problem; meant for |x| <= 2.5."""
    if abs(x) > SWITCH + 1e-12:
        raise UnsupportedDeformationError(f"|x| = {abs(x)} is beyond the undeformed range {SWITCH}")
    sol = _solve(undeformed_problem(s, x), m, scaled=False)
    if sol is None:
        return 0.0 + 0j
    return 2 * sol.moment()[0, 1]


def positive_problem(s, x, r=4.0):
    """Lines Im z = +-1/2 near +-i/2 with jumps G1 (upper) and G6 (lower), lam = sqrt(x) z."""
    s = _as_triple(s)
    if s.s2 != 0:
        raise UnsupportedDeformationError("the positive-x deformation needs s2 = 0")
    if x <= 0:
        raise ValueError("positive_problem needs x > 0")
    K = x**1.5
    a = r * x ** (-0.75)
    s1, s6 = s.extended()[0], s.extended()[5]
    legs = [
        rh.ContourLeg(IntervalMap(0.5j - a, 0.5j + a)),
        rh.ContourLeg(IntervalMap(-0.5j - a, -0.5j + a)),
    ]

    def jump(i, z):
        z = np.asarray(z, dtype=complex)
        if i == 0:
            return _lower(s1 * np.exp(1j * K * theta(z)))
        return _upper(s6 * np.exp(-1j * K * theta(z)))

    return rh.truncate(rh.RHProblem(legs, jump, f"PII x={x} > 0"), TRUNC)


def pii_positive(s, x, m=40):
    prob = positive_problem(s, x)
    sol = _solve(prob, m)
    if sol is None:
        return 0.0 + 0j
    return 2 * np.sqrt(x) * sol.moment()[0, 1]


# ---- Hastings-McLeod, x < 0 ----


def g_hm(z):
    """(8/3)(z^2 - alpha^2)^{3/2}, cut on [-alpha, alpha]; g - theta = O(1/z)."""
    z = np.asarray(z, dtype=complex)
    return 8 / 3 * (z - ALPHA) ** 1.5 * (z + ALPHA) ** 1.5


def g_hm_boundary(x, side=+1):
    """Boundary values on (-alpha, alpha): g_+ = -i (8/3)(alpha^2 - x^2)^{3/2} = -g_-."""
    x = np.asarray(x, dtype=float)
    return -side * 1j * 8 / 3 * (ALPHA**2 - x**2) ** 1.5


def beta_hm(z):
    z = np.asarray(z, dtype=complex)
    return (z - ALPHA) ** 0.25 * (z + ALPHA) ** -0.25


def outer_hm(z, s1, side=+1):
    """Outer solution with jump [[0, s1], [s1, 0]] on (-alpha, alpha), tending to I."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    b = beta_hm(z)
    on = (z.imag == 0) & (np.abs(z.real) < ALPHA)
    if np.any(on):
        x = z.real[on]
        b[on] = (ALPHA - x) ** 0.25 * (x + ALPHA) ** -0.25 * np.exp(side * 0.25j * np.pi)
    P = np.empty((len(z), 2, 2), dtype=complex)
    P[:, 0, 0] = P[:, 1, 1] = 0.5 * (b + 1 / b)
    P[:, 0, 1] = P[:, 1, 0] = -0.5j * s1 * (b - 1 / b)
    return P


def g0_hat(z, s1, K, side_g=+1):
    """Conjugated segment jump [[0, s1], [s1, e^{iK(g_- - g_+)/2}]]."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    gp = g_hm_boundary(z.real, +1)
    J = np.zeros((len(z), 2, 2), dtype=complex)
    J[:, 0, 1] = J[:, 1, 0] = s1
    J[:, 1, 1] = np.exp(-1j * K * gp)
    return J


@dataclass
class HMGeometry:
    x: float
    r: float
    ray: float

    @property
    def K(self):
        return abs(self.x) ** 1.5


def _disk_vertices(center, r, angles):
    return [center + r * np.exp(1j * t) if abs(np.sin(t)) > 1e-15 else center + r * np.cos(t) for t in angles]


def negative_hm_problem(sign, x, ray=1.5):
    """Delta = Phi_hat Psi_out^{-1} outside the two disks, Phi_hat inside."""
    if x >= 0:
        raise ValueError("negative_hm_problem needs x < 0")
    s = StokesTriple.hastings_mcleod(sign)
    s1, _, s3, s4, _, s6 = s.extended()
    K = abs(x) ** 1.5
    r = min(1 / abs(x), 0.45 * ALPHA)
    geo = HMGeometry(x, r, ray)
    legs, kinds = [], []

    def add(a, b, kind):
        legs.append(rh.ContourLeg(IntervalMap(complex(a), complex(b))))
        kinds.append(kind)

    A = ALPHA
    # rays: (center, angle, stokes constant, lower-triangular?)
    rays = [(A, np.pi / 3, s1, True), (A, -np.pi / 3, s6, False), (-A, 2 * np.pi / 3, s3, True), (-A, -2 * np.pi / 3, s4, False)]
    for c, t, sk, low in rays:
        d = np.exp(1j * t)
        add(c, c + r * d, ("ray-in", sk, low))
        add(c + r * d, c + ray * d, ("ray-out", sk, low))
    add(-A, -A + r, ("seg-in",))
    add(-A + r, A - r, ("seg-out",))
    add(A - r, A, ("seg-in",))
    # disk polygons, counterclockwise
    for c, angs in ((A, [-np.pi / 3, np.pi / 3, np.pi, 5 * np.pi / 3]), (-A, [0.0, 2 * np.pi / 3, 4 * np.pi / 3, 2 * np.pi])):
        v = _disk_vertices(c, r, angs)
        for j in range(3):
            add(v[j], v[j + 1], ("circle", 1 if np.imag(v[j] + v[j + 1]) > 0 else -1))

    def ray_jump(z, sk, low):
        gz = g_hm(z)
        return _lower(sk * np.exp(1j * K * gz)) if low else _upper(sk * np.exp(-1j * K * gz))

    def jump(i, z):
        z = np.asarray(z, dtype=complex)
        z = np.where(np.abs(z.imag) < 1e-14, z.real + 0j, z)
        kind = kinds[i]
        if kind[0] == "ray-in":
            return ray_jump(z, kind[1], kind[2])
        if kind[0] == "ray-out":
            P = outer_hm(z, s1)
            return P @ ray_jump(z, kind[1], kind[2]) @ np.linalg.inv(P)
        if kind[0] == "seg-in":
            return g0_hat(z, s1, K)
        if kind[0] == "seg-out":
            Pm, Pp = outer_hm(z, s1, -1), outer_hm(z, s1, +1)
            return Pm @ g0_hat(z, s1, K) @ np.linalg.inv(Pp)
        return outer_hm(z, s1, kind[1])

    prob = rh.RHProblem(legs, jump, f"PII Hastings-McLeod x={x}")
    return rh.truncate(prob, TRUNC), geo


def pii_negative_hm(sign, x, m=40):
    """Hastings-McLeod u(x) for x < 0 (s1 = -s3 = sign * i)."""
    prob, _ = negative_hm_problem(sign, x)
    s1 = sign * 1j
    sol = _solve(prob, m)
    mom = 0j if sol is None else sol.moment()[0, 1]
    # the outer parametrix contributes i s1 alpha / (2z) to Phi_12
    return 2 * np.sqrt(abs(x)) * (mom + 0.5j * s1 * ALPHA)


def pii(s, x, m=40):
    """u(x) = P_II(s1, s2, s3; x), choosing the regime from x."""
    s = _as_triple(s)
    if s.s1 == 0 and s.s2 == 0 and s.s3 == 0:
        return 0.0 + 0j
    if abs(x) <= SWITCH:
        return pii_undeformed(s, x, m)
    if x > 0:
        if s.s2 != 0:
            raise UnsupportedDeformationError("x > 2.5 is implemented for s2 = 0 only")
        return pii_positive(s, x, m)
    if s.is_hastings_mcleod:
        return pii_negative_hm(1 if s.s1.imag > 0 else -1, x, m)
    raise UnsupportedDeformationError("x < -2.5 is implemented for s1 = -s3 = +-i, s2 = 0 only")


def regime(x):
    if abs(x) <= SWITCH:
        return "undeformed"
    return "positive" if x > 0 else "negative-HM"


def ode_residual(u, x, h=1e-3):
    """|u'' - x u - 2u^3| at x with a five-point second difference of the callable u."""
    xs = x + h * np.arange(-2, 3)
    v = np.array([u(t) for t in xs])
    d2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)
    return abs(d2 - x * v[2] - 2 * v[2] ** 3), abs(d2)


__all__ = [
    "StokesTriple",
    "StokesError",
    "UnsupportedDeformationError",
    "stokes_extend",
    "theta",
    "pii_undeformed",
    "pii_positive",
    "pii_negative_hm",
    "pii",
    "regime",
    "g_hm",
    "outer_hm",
    "ode_residual",
]
