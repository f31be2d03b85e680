"""Orthogonal polynomials with respect to e^{-nV} from a deformed RH problem.

Y is normalised with g, the support is lensed and the remaining jumps are
removed with the global parametrix N outside two small disks and with the
piecewise-constant local parametrix Q e^{nh sigma3/2} inside them, where
h = V - ell - 2g.  What is left for Phi is near the identity except on the disk
boundaries, the lens arcs close to the edges and the real axis close to the
edges; everything else is truncated.

A convenient by-product: with v = T[:, 0] e^{-nh/2},
    pi_n = v_0 e^{n(V - ell)/2},   gamma_{n-1} pi_{n-1} = v_1 e^{n(V + ell)/2},
and the Christoffel-Darboux kernel needs only v.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import rhsolver as rh
from .chebcore import IntervalMap, cheb_diff, cheb_points, cheb_transform
from .equilibrium import EquilibriumMeasure, equilibrium_measure, g_eval, named_potential

log = logging.getLogger(__name__)

I2 = np.eye(2, dtype=complex)
SIGMA = np.array([[0, 1], [-1, 0]], dtype=complex)

# constant local solutions by sector, right edge (counterclockwise from arg 0)
Q_RIGHT = {
    "A": I2,
    "B": np.array([[1, 0], [-1, 1]], dtype=complex),
    "C": np.array([[0, -1], [1, 1]], dtype=complex),
    "D": np.array([[1, -1], [0, 1]], dtype=complex),
}
Q_LEFT = {
    "I": I2,
    "II": np.array([[1, -1], [0, 1]], dtype=complex),
    "III": np.array([[1, 0], [-1, 1]], dtype=complex),
    "IV": np.array([[0, -1], [1, 1]], dtype=complex),
}


STABILIZE_ABOVE = 50


class ContourPlacementError(RuntimeError):
    pass


def _plus_zero(z):
    # real points get a +0 imaginary part, so principal branches give plus-side values
    z = np.asarray(z, dtype=complex)
    return np.where(np.imag(z) == 0, np.real(z) + 0j, z)


def global_parametrix(z, a, b, side=+1):
    """N(z) with nu = (z - b)^{1/4} (z - a)^{-1/4}; jump [[0,1],[-1,0]] on (a, b)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    re = np.imag(z) == 0
    nu = np.power(z - b, 0.25) * np.power(z - a, -0.25)
    if np.any(re):
        x = np.real(z[re])
        sgn = 1 if side > 0 else -1
        nb = np.where(x < b, np.abs(x - b) ** 0.25 * np.exp(sgn * 0.25j * np.pi), np.abs(x - b) ** 0.25)
        na = np.where(x < a, np.abs(x - a) ** -0.25 * np.exp(-sgn * 0.25j * np.pi), np.abs(x - a) ** -0.25)
        nu[re] = nb * na
    A = np.array([[1, 1j], [-1j, 1]])
    B = np.array([[1, -1j], [1j, 1]])
    return (1 / (2 * nu))[:, None, None] * A + (nu / 2)[:, None, None] * B


@dataclass(frozen=True)
class Disk:
    end: str  # 'a' or 'b'
    center: float
    radius: float
    theta: float  # lens attachment angle measured from the positive real axis

    max_arc: float = np.pi

    def arcs(self):
        """(label, start angle, end angle) for each sector, counterclockwise from arg 0."""
        t = self.theta
        if self.end == "b":
            return [("A", 0.0, t), ("B", t, np.pi), ("C", np.pi, 2 * np.pi - t), ("D", 2 * np.pi - t, 2 * np.pi)]
        return [("III", 0.0, t), ("I", t, np.pi), ("II", np.pi, 2 * np.pi - t), ("IV", 2 * np.pi - t, 2 * np.pi)]

    def chords(self):
        """Polygon edges (za, zb, sector label); wide sectors are split into several chords."""
        out = []
        for label, t0, t1 in self.arcs():
            k = int(np.ceil((t1 - t0) / self.max_arc - 1e-12))
            angs = np.linspace(t0, t1, k + 1)
            pts = [self._pt(u) for u in angs]
            out += [(pts[j], pts[j + 1], label) for j in range(k)]
        return out

    def _pt(self, u):
        # exact vertices on the real axis
        if abs(u) < 1e-15 or abs(u - 2 * np.pi) < 1e-15:
            return complex(self.center + self.radius)
        if abs(u - np.pi) < 1e-15:
            return complex(self.center - self.radius)
        return self.center + self.radius * np.exp(1j * u)

    @property
    def vertices(self):
        return [c[0] for c in self.chords()]

    def sector(self, z):
        """Sector label of points z inside the disk (plus side on the real axis)."""
        ang = np.angle(_plus_zero(np.asarray(z) - self.center))
        t = self.theta
        if self.end == "b":
            return np.where(
                (ang >= 0) & (ang < t),
                "A",
                np.where(ang >= t, "B", np.where(ang < -t, "C", "D")),
            )
        return np.where(
            ang >= t, "I", np.where(ang >= 0, "III", np.where(ang < -t, "II", "IV"))
        )

    def Q(self, label):
        return (Q_RIGHT if self.end == "b" else Q_LEFT)[str(label)]

    def contains(self, z):
        return _in_polygon(np.asarray(z, dtype=complex), self.vertices)


def _in_polygon(z, verts, closed_tol=0.0):
    """Even-odd rule; points on the boundary count as inside."""
    z = np.atleast_1d(z)
    vx = np.array([v.real for v in verts])
    vy = np.array([v.imag for v in verts])
    x, y = z.real[:, None], z.imag[:, None]
    x1, y1 = vx[None, :], vy[None, :]
    x2, y2 = np.roll(vx, -1)[None, :], np.roll(vy, -1)[None, :]
    cond = (y1 > y) != (y2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
    inside = np.sum(cond & (x < xint), axis=1) % 2 == 1
    # boundary points
    ex, ey = x2 - x1, y2 - y1
    L2 = ex**2 + ey**2
    t = np.clip(((x - x1) * ex + (y - y1) * ey) / L2, 0, 1)
    d = np.hypot(x - (x1 + t * ex), y - (y1 + t * ey))
    scale = max(np.ptp(vx), np.ptp(vy))
    on = np.any(d <= 1e-14 * scale + closed_tol, axis=1)
    return inside | on


@dataclass
class Geometry:
    a: float
    b: float
    disk_a: Disk
    disk_b: Disk
    apex_height: float
    left_end: float
    right_end: float

    @property
    def apex(self):
        return 0.5 * (self.a + self.b) + 1j * self.apex_height

    def lens_polyline(self, upper=True):
        s = 1 if upper else -1
        va = self.disk_a.center + self.disk_a.radius * np.exp(s * 1j * self.disk_a.theta)
        vb = self.disk_b.center + self.disk_b.radius * np.exp(s * 1j * self.disk_b.theta)
        apex = 0.5 * (self.a + self.b) + s * 1j * self.apex_height
        return [va, apex, vb]

    def region(self, z):
        """'disk-a', 'disk-b', 'lens-upper', 'lens-lower' or 'outside' (plus side on the axis)."""
        z = _plus_zero(np.atleast_1d(z))
        out = np.full(z.shape, "outside", dtype=object)
        da = self.disk_a.contains(z)
        db = self.disk_b.contains(z)
        up = _in_polygon(z, [self.a] + self.lens_polyline(True) + [self.b])
        lo = _in_polygon(z, [self.a] + self.lens_polyline(False) + [self.b])
        realsupp = (np.imag(z) == 0) & (np.real(z) > self.a) & (np.real(z) < self.b)
        out[lo & (np.imag(z) < 0)] = "lens-lower"
        out[(up & (np.imag(z) > 0)) | realsupp] = "lens-upper"
        out[da] = "disk-a"
        out[db] = "disk-b"
        return out


@dataclass(frozen=True)
class LegInfo:
    kind: str  # 'disk', 'lens', 'real'
    disk: Disk | None = None
    sector: str | None = None
    side: int = 1


def _h(eqm, n, z, side=+1):
    z = _plus_zero(z)
    return eqm.potential.V(z) - eqm.ell - 2 * g_eval(eqm, z, side)


def _degenerate_right(eqm):
    return eqm.degenerate("R")


def _degenerate_left(eqm):
    return eqm.degenerate("L")


def make_geometry(eqm, n, height=0.35, r0=None, degenerate_exponent=2 / 7, max_arc=0.7 * np.pi, radius=None):
    a, b = eqm.a, eqm.b
    L = b - a
    H = height * L
    # shrink the lens until e^{nh} decays along it
    for _ in range(20):
        t = np.linspace(0.02, 0.98, 97)
        ok = True
        for s in (1, -1):
            pts = np.concatenate(
                [a + t * (0.5 * L + s * 1j * H), 0.5 * (a + b) + s * 1j * H + t * (0.5 * L - s * 1j * H)]
            )
            if np.any(np.real(_h(eqm, n, pts)) > 0):
                ok = False
        if ok:
            break
        H *= 0.8
    else:
        raise ContourPlacementError("could not place lens arcs with decaying jumps")
    if r0 is None:
        r0 = 0.9 * min(H, L / 4)
    disks = []
    for end in ("a", "b"):
        degen = _degenerate_left(eqm) if end == "a" else _degenerate_right(eqm)
        expo = degenerate_exponent if degen else 2 / 3
        r = min(r0 * n ** (-expo), r0) if radius is None else radius
        if end == "b":
            theta = 6 * np.pi / 7 if degen else 2 * np.pi / 3
            disks.append(Disk("b", b, r, theta, max_arc))
        else:
            theta = np.pi / 7 if degen else np.pi / 3
            disks.append(Disk("a", a, r, theta, max_arc))
    # real legs run until e^{-nh} is negligible
    ends = []
    for sgn, edge, disk in ((1, b, disks[1]), (-1, a, disks[0])):
        step = max(L, 1.0)
        x = edge + sgn * disk.radius
        for _ in range(60):
            x = x + sgn * step * 0.25
            val = np.real(_h(eqm, n, np.array([x])))[0]
            if n * val > 45:
                break
        ends.append(x)
    return Geometry(a, b, disks[0], disks[1], H, ends[1], ends[0])


def _lens_jump(n, eqm, geo):
    def G(z, side=1):
        N = global_parametrix(z, geo.a, geo.b, side)
        J = np.tile(I2, (len(z), 1, 1))
        J[:, 1, 0] = np.exp(n * _h(eqm, n, z, side))
        return N @ J @ np.linalg.inv(N)

    return G


def _real_jump(n, eqm, geo):
    def G(z, side=1):
        N = global_parametrix(z, geo.a, geo.b, side)
        J = np.tile(I2, (len(z), 1, 1))
        J[:, 0, 1] = np.exp(-n * _h(eqm, n, z, side))
        return N @ J @ np.linalg.inv(N)

    return G


def _disk_jump(n, eqm, geo, disk, sector, local=None):
    Qinv = np.linalg.inv(disk.Q(sector))

    def G(z, side=1):
        if local is not None:
            N = global_parametrix(z, geo.a, geo.b, side)
            return N @ np.linalg.inv(local(disk, sector, z, side))
        N = global_parametrix(z, geo.a, geo.b, side)
        hh = n * _h(eqm, n, z, side)
        E = np.zeros((len(z), 2, 2), dtype=complex)
        E[:, 0, 0] = np.exp(-hh / 2)
        E[:, 1, 1] = np.exp(hh / 2)
        return N @ E @ Qinv

    return G


def build_phi_problem(potential, n, eqm=None, trunc_tol=1e-15, local=None, **geo_kw):
    """Deformed problem for Phi; returns (RHProblem, Geometry, list of LegInfo, eqm).

    ``local(disk, sector, z, side)`` replaces the default local parametrix Q e^{nh sigma3/2}.
    """
    if isinstance(potential, str):
        potential = named_potential(potential)
    if eqm is None:
        eqm = equilibrium_measure(potential)
    geo = make_geometry(eqm, n, **geo_kw)
    legs, infos, fns = [], [], []

    def add(za, zb, info, fn):
        legs.append(rh.ContourLeg(IntervalMap(complex(za), complex(zb))))
        infos.append(info)
        fns.append(fn)

    for disk in (geo.disk_a, geo.disk_b):
        for za, zb, label in disk.chords():
            side = 1 if np.imag(za + zb) > 0 else -1
            add(za, zb, LegInfo("disk", disk, label, side), _disk_jump(n, eqm, geo, disk, label, local))
    lens = _lens_jump(n, eqm, geo)
    for upper in (True, False):
        va, apex, vb = geo.lens_polyline(upper)
        add(va, apex, LegInfo("lens"), lens)
        add(apex, vb, LegInfo("lens"), lens)
    real = _real_jump(n, eqm, geo)
    add(geo.disk_b.center + geo.disk_b.radius, geo.right_end, LegInfo("real"), real)
    add(geo.left_end, geo.disk_a.center - geo.disk_a.radius, LegInfo("real"), real)

    scale = max(1.0, abs(geo.a), abs(geo.b))

    def jump(i, z):
        z = np.asarray(z, dtype=complex)
        # rounding from the local coordinates must not push a vertex off the axis
        z = np.where(np.abs(z.imag) < 1e-13 * scale, z.real + 0j, z)
        info = infos[i]
        G = fns[i](z, info.side)
        if not np.all(np.isfinite(G)) or np.max(np.abs(G)) > 1e8:
            raise ContourPlacementError(f"jump blow-up on leg {i} ({info.kind})")
        return G

    prob = rh.RHProblem(legs, jump, f"phi[{potential.name}, n={n}]")
    tprob = rh.truncate(prob, trunc_tol)
    # keep the leg metadata aligned with the truncated problem
    kept = []
    for leg in tprob.legs:
        for i, old in enumerate(legs):
            if _on_segment(leg.imap.a, old.imap) and _on_segment(leg.imap.b, old.imap):
                kept.append(i)
                break
    tinfos = [infos[i] for i in kept]

    def tjump(j, z):
        return jump(kept[j], z)

    return rh.RHProblem(tprob.legs, tjump, prob.name), geo, tinfos, eqm


def _on_segment(z, imap):
    t = imap.forward(z)
    return abs(t.imag) < 1e-9 and -1 - 1e-9 <= t.real <= 1 + 1e-9


def _components(legs):
    """Connected components of a union of legs (legs sharing an endpoint are connected)."""
    parent = list(range(len(legs)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for jn in rh.find_junctions(legs):
        ids = [m.leg for m in jn.members]
        for i in ids[1:]:
            parent[find(i)] = find(ids[0])
    groups = {}
    for i in range(len(legs)):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def split_pieces(problem, conj_for=None):
    """Disjoint sub-problems with their local scalings (alpha, beta).

    ``conj_for(component)`` may return an rh.Conjugation for the piece made of
    the given leg indices; it is appended to the piece tuple.
    """
    pieces = []
    for comp in _components(problem.legs):
        pts = np.array([[problem.legs[i].imap.a, problem.legs[i].imap.b] for i in comp]).ravel()
        beta = 0.5 * (pts.real.min() + pts.real.max()) + 0.5j * (pts.imag.min() + pts.imag.max())
        alpha = max(np.max(np.abs(pts - beta)), 1e-300)

        def jump(j, z, comp=comp):
            return problem.jump_at(comp[j], z)

        sub = rh.RHProblem([problem.legs[i] for i in comp], jump, problem.name)
        conj = conj_for(comp) if conj_for is not None else None
        pieces.append((sub, alpha, beta) if conj is None else (sub, alpha, beta, conj))
    return pieces


def nbar(geo, end):
    """Constant stand-in for N near an edge: N at the outer real vertex of the disk.

    N(z) N(z0)^{-1} = ((nu0/nu) A + (nu/nu0) B)/2 stays bounded on the disk's
    annulus, so conjugating by it removes the n^{1/6} growth of the jumps.
    """
    disk = geo.disk_a if end == "a" else geo.disk_b
    z0 = disk.center - disk.radius if end == "a" else disk.center + disk.radius
    return global_parametrix(np.array([z0]), geo.a, geo.b)[0]


def disk_stabilizer(geo, infos):
    """conj_for callback: conjugate a piece by nbar when it holds exactly one disk."""

    def conj_for(comp):
        ends = {infos[i].disk.end for i in comp if infos[i].kind == "disk"}
        if len(ends) != 1:
            return None
        end = ends.pop()
        disk = geo.disk_a if end == "a" else geo.disk_b
        inner = [j for j, i in enumerate(comp) if infos[i].kind == "disk"]
        # disk chords run counterclockwise, so the disk is on their + side
        return rh.Conjugation(nbar(geo, end), inner, disk.contains)

    return conj_for


def solve_pieces(problem, m, check=True, conj_for=None):
    pieces = split_pieces(problem, conj_for)
    return rh.scaled_solve(pieces, m, check=check), pieces


def pieces_cauchy_error(problem, m, conj_for=None):
    """Cauchy error (m versus 2m nodes per leg) of the sequential solve."""
    s1, _ = solve_pieces(problem, m, check=False, conj_for=conj_for)
    s2, _ = solve_pieces(problem, 2 * m, check=False, conj_for=conj_for)
    return _stage_difference(s1, s2, 2 * m)


@dataclass
class OPSystem:
    eqm: EquilibriumMeasure
    n: int
    solution: object = field(repr=False)
    geometry: Geometry = field(repr=False)
    problem: rh.RHProblem = field(repr=False)
    m: int = 0
    cauchy_error: float = float("nan")

    @property
    def potential(self):
        return self.eqm.potential

    def h(self, z, side=+1):
        return _h(self.eqm, self.n, z, side)

    def Phi(self, z):
        return self.solution.evaluate(_plus_zero(np.atleast_1d(z)), +1)

    def v(self, z):
        """T[:, 0] e^{-nh/2}; entire up to the factor e^{-n(V -+ ell)/2}."""
        z = _plus_zero(np.atleast_1d(np.asarray(z, dtype=complex)))
        geo, n = self.geometry, self.n
        reg = geo.region(z)
        Phi = self.Phi(z)
        out = np.zeros(z.shape + (2,), dtype=complex)
        for disk, name in ((geo.disk_a, "disk-a"), (geo.disk_b, "disk-b")):
            sel = reg == name
            if np.any(sel):
                labels = disk.sector(z[sel])
                Q = np.array([disk.Q(lb) for lb in labels])
                # T[:,0] e^{-nh/2} = Phi Q (1, +-1)^T in lens sectors, Phi Q (1, 0)^T elsewhere
                PQ = Phi[sel] @ Q
                if disk.end == "b":
                    up, dn = np.isin(labels, ["B"]), np.isin(labels, ["C"])
                else:
                    up, dn = np.isin(labels, ["III"]), np.isin(labels, ["IV"])
                coef = np.where(up, 1.0, np.where(dn, -1.0, 0.0))
                out[sel] = PQ[:, :, 0] + coef[:, None] * PQ[:, :, 1]
        rest = ~np.isin(reg, ["disk-a", "disk-b"])
        if np.any(rest):
            zr = z[rest]
            S = Phi[rest] @ global_parametrix(zr, geo.a, geo.b, +1)
            e = np.exp(-n * self.h(zr) / 2)
            rr = reg[rest]
            coef = np.where(rr == "lens-upper", 1.0, np.where(rr == "lens-lower", -1.0, 0.0))
            out[rest] = S[:, :, 0] * e[:, None] + coef[:, None] * S[:, :, 1] / e[:, None]
        return out

    def _far(self, z):
        # outside the lens and disks Y = (Phi N) e^{ng sigma3} avoids the e^{-nh/2} e^{nV/2} product
        return self.geometry.region(z) == "outside"

    def pi_n(self, z):
        z = np.asarray(z, dtype=complex)
        flat = _plus_zero(z.ravel())
        far = self._far(flat)
        out = np.empty(flat.shape, dtype=complex)
        if np.any(~far):
            v = self.v(flat[~far])[:, 0]
            out[~far] = v * np.exp(self.n * (self.potential.V(flat[~far]) - self.eqm.ell) / 2)
        if np.any(far):
            out[far] = self.Y(flat[far])[:, 0, 0]
        return out.reshape(z.shape)

    def gamma_pi_prev(self, z):
        """gamma_{n-1} pi_{n-1}(z), i.e. Y_21."""
        z = np.asarray(z, dtype=complex)
        flat = _plus_zero(z.ravel())
        far = self._far(flat)
        out = np.empty(flat.shape, dtype=complex)
        if np.any(~far):
            v = self.v(flat[~far])[:, 1]
            out[~far] = v * np.exp(self.n * (self.potential.V(flat[~far]) + self.eqm.ell) / 2)
        if np.any(far):
            out[far] = self.Y(flat[far])[:, 1, 0]
        return out.reshape(z.shape)

    @property
    def gamma(self):
        """gamma_{n-1} = lim z^{1-n} Y_21(z) = e^{n ell} (Phi_1 + N_1)_21."""
        N1_21 = -0.25j * (self.eqm.b - self.eqm.a)
        return np.exp(self.n * self.eqm.ell) * (self.solution.moment()[1, 0] + N1_21)

    def T(self, z):
        """Full T(z) (plus side on the real axis)."""
        z = _plus_zero(np.atleast_1d(np.asarray(z, dtype=complex)))
        geo, n = self.geometry, self.n
        reg = geo.region(z)
        Phi = self.Phi(z)
        hh = n * self.h(z)
        out = np.zeros((len(z), 2, 2), dtype=complex)
        for i in range(len(z)):
            if reg[i] in ("disk-a", "disk-b"):
                disk = geo.disk_a if reg[i] == "disk-a" else geo.disk_b
                E = np.diag([np.exp(hh[i] / 2), np.exp(-hh[i] / 2)])
                S = Phi[i] @ disk.Q(disk.sector(z[i : i + 1])[0]) @ E
            else:
                S = Phi[i] @ global_parametrix(z[i : i + 1], geo.a, geo.b)[0]
            lab = reg[i]
            if lab in ("disk-a", "disk-b"):
                disk = geo.disk_a if lab == "disk-a" else geo.disk_b
                sec = disk.sector(z[i : i + 1])[0]
                lab = {"B": "lens-upper", "C": "lens-lower", "III": "lens-upper", "IV": "lens-lower"}.get(
                    str(sec), "outside"
                )
            Lf = I2.copy()
            if lab == "lens-upper":
                Lf[1, 0] = np.exp(hh[i])
            elif lab == "lens-lower":
                Lf[1, 0] = -np.exp(hh[i])
            out[i] = S @ Lf
        return out

    def Y(self, z):
        """Y = e^{-n ell sigma3/2} T e^{n g sigma3} e^{n ell sigma3/2}."""
        z = _plus_zero(np.atleast_1d(np.asarray(z, dtype=complex)))
        T = self.T(z)
        g = g_eval(self.eqm, z, +1)
        n, ell = self.n, self.eqm.ell
        Y = T.copy()
        Y[:, 0, 0] *= np.exp(n * g)
        Y[:, 0, 1] *= np.exp(-n * (g + ell))
        Y[:, 1, 0] *= np.exp(n * (g + ell))
        Y[:, 1, 1] *= np.exp(-n * g)
        return Y

    def eval_Y(self, z, row=1):
        Y = self.Y(z)
        return Y[:, row - 1, 0], Y[:, row - 1, 1]

    def kernel_handle(self):
        return KernelHandle(self)


def _stabilizer(stabilize, n, geo, infos):
    if stabilize is None:
        stabilize = n > STABILIZE_ABOVE
    return disk_stabilizer(geo, infos) if stabilize else None


def solve_op(potential, n, m=None, tol=1e-10, m0=20, mmax=160, eqm=None, stabilize=None, **geo_kw):
    """Solve the OP problem for e^{-nV}; m=None chooses m by doubling until the Cauchy error < tol.

    ``stabilize`` conjugates each single-disk piece by nbar (default: on for n > 50).
    """
    if isinstance(potential, str):
        potential = named_potential(potential)
    prob, geo, infos, eqm = build_phi_problem(potential, n, eqm, **geo_kw)
    conj_for = _stabilizer(stabilize, n, geo, infos)
    if m is not None:
        sol, _ = solve_pieces(prob, m, conj_for=conj_for)
        return OPSystem(eqm, n, sol, geo, prob, m)
    rh.check_jumps(prob)
    m = m0
    s1, _ = solve_pieces(prob, m, check=False, conj_for=conj_for)
    while True:
        s2, _ = solve_pieces(prob, 2 * m, check=False, conj_for=conj_for)
        err = _stage_difference(s1, s2, 2 * m)
        if err < tol or 2 * m >= mmax:
            if err >= tol:
                log.warning("Cauchy error %.3g above %.1g at m = %d", err, tol, 2 * m)
            return OPSystem(eqm, n, s2, geo, prob, 2 * m, err)
        s1, m = s2, 2 * m


def _stage_difference(s1, s2, m2):
    # max |U_m - U_2m| at the 2m-point nodes of every leg of every stage
    worst = 0.0
    for st1, st2 in zip(s1.stages, s2.stages):
        for l, leg in enumerate(st1.sol.legs):
            z = cheb_points(m2, leg.imap)
            worst = max(worst, float(np.max(np.abs(st1.sol.density(l, z) - st2.sol.density(l, z)))))
    return worst


class KernelHandle:
    """Christoffel-Darboux kernel K_n(x, y) = -(v0(x) v1(y) - v1(x) v0(y)) / (2 pi i (x - y))."""

    def __init__(self, system, confluence=1e-6, degree=32):
        self.system = system
        self.confluence = confluence
        self.degree = degree

    @property
    def n(self):
        return self.system.n

    def _v(self, x):
        return self.system.v(np.asarray(x, dtype=float))

    def kernel(self, x, y):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        x, y = np.broadcast_arrays(x, y)
        out = np.empty(x.shape)
        close = np.abs(x - y) < self.confluence * max(1.0, self.system.eqm.b - self.system.eqm.a)
        if np.any(~close):
            vx = self._v(x[~close])
            vy = self._v(y[~close])
            num = vx[:, 0] * vy[:, 1] - vx[:, 1] * vy[:, 0]
            out[~close] = np.real(-num / (2j * np.pi * (x[~close] - y[~close])))
        if np.any(close):
            out[close] = self.diag(0.5 * (x[close] + y[close]))
        return out

    def matrix(self, x, y):
        """Kernel matrix K[i, j] = K_n(x_i, y_j), evaluating v only once per point."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        vx, vy = self._v(x), self._v(y)
        num = np.outer(vx[:, 0], vy[:, 1]) - np.outer(vx[:, 1], vy[:, 0])
        with np.errstate(divide="ignore", invalid="ignore"):
            K = np.real(-num / (2j * np.pi * (x[:, None] - y[None, :])))
        close = np.abs(x[:, None] - y[None, :]) < self.confluence
        if np.any(close):
            i, j = np.nonzero(close)
            K[i, j] = self.diag(0.5 * (x[i] + y[j]))
        return K

    def _window(self, x):
        eqm = self.system.eqm
        return min(0.1, 2.0 / self.n) * (eqm.b - eqm.a)

    def diag(self, x):
        """K_n(x, x) = -(v0' v1 - v1' v0)/(2 pi i), derivatives from local Chebyshev interpolants."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        p = self.degree + 1
        t = np.real(cheb_points(p))
        w = np.array([self._window(xi) for xi in x])
        pts = x[:, None] + 0.5 * w[:, None] * t[None, :]
        vals = self._v(pts.ravel()).reshape(len(x), p, 2)
        out = np.empty(x.shape)
        for i, xi in enumerate(x):
            imap = IntervalMap(xi - w[i] / 2, xi + w[i] / 2)
            ser = cheb_transform(vals[i], imap)
            d = cheb_diff(ser)(xi)
            v = ser(xi)
            out[i] = np.real(-(d[0] * v[1] - d[1] * v[0]) / (2j * np.pi))
        return out


def kernel(handle, x, y):
    return handle.kernel(x, y)


def kernel_diag(handle, x):
    return handle.diag(x)


def eval_Y(system, z, row=1):
    return system.eval_Y(z, row)


def min_nodes_op(potential, n, tol=1e-10, candidates=range(8, 161, 4), stabilize=None, **geo_kw):
    """Smallest per-leg m whose Cauchy error (m versus 2m) is below tol."""
    prob, geo, infos, _ = build_phi_problem(potential, n, **geo_kw)
    conj_for = _stabilizer(stabilize, n, geo, infos)
    for m in candidates:
        if pieces_cauchy_error(prob, m, conj_for) < tol:
            return m
    raise rh.RHSolveError(f"no m in {candidates} reaches Cauchy error {tol:g}")


def stabilized_jump_size(potential, n, end="a", samples=16, stabilize=True, **geo_kw):
    """max |entry| of the jumps on the legs of the piece around one disk, conjugated by nbar if asked."""
    prob, geo, infos, _ = build_phi_problem(potential, n, **geo_kw)
    disk = geo.disk_a if end == "a" else geo.disk_b
    conj = disk_stabilizer(geo, infos) if stabilize else None
    for comp in _components(prob.legs):
        if not any(infos[i].kind == "disk" and infos[i].disk.end == end for i in comp):
            continue
        c = conj(comp) if conj is not None else None
        worst = 0.0
        for j, i in enumerate(comp):
            G = prob.jump_at(i, prob.legs[i].imap.inverse(np.linspace(-1, 1, samples)))
            if c is not None:
                G = c.jump(j, G)
            worst = max(worst, float(np.max(np.abs(G))))
        return worst
    raise ValueError(f"no legs around disk {end!r}")
