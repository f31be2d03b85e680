"""Collocation solver for matrix Riemann-Hilbert problems on unions of segments.

A problem [G; Gamma] asks for Phi analytic off Gamma with Phi+ = Phi- G on Gamma
and Phi(inf) = I.  We write Phi = I + C U, expand U in mapped Chebyshev
polynomials on every leg and collocate U - C^- U (G - I) = G - I at the
Chebyshev extrema of each leg.  Junction rows use the finite-part values of the
Cauchy transform, which is legitimate because the computed U satisfies the
zero-sum condition.

The two rows of Phi decouple, so the 4N x 4N system is assembled as one
2N x 2N matrix with two right-hand sides.  Unknowns are ordered leg by leg,
coefficient by coefficient, matrix column innermost.
"""

import csv
import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from . import cauchy
from .chebcore import IntervalMap, cheb_points, clenshaw

log = logging.getLogger(__name__)

I2 = np.eye(2, dtype=complex)


class RHSolveError(RuntimeError):
    pass


class JumpConsistencyError(RHSolveError):
    pass


@dataclass(frozen=True)
class ContourLeg:
    imap: IntervalMap
    m: int | None = None

    @classmethod
    def segment(cls, a, b, m=None):
        return cls(IntervalMap(complex(a), complex(b)), m)


@dataclass
class RHProblem:
    """Legs plus a jump evaluator ``jump(leg_index, z) -> (len(z), 2, 2)``."""

    legs: Sequence[ContourLeg]
    jump: Callable[[int, np.ndarray], np.ndarray]
    name: str = ""

    def __post_init__(self):
        self.legs = tuple(
            leg if isinstance(leg, ContourLeg) else ContourLeg(leg) for leg in self.legs
        )

    def jump_at(self, i, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return np.asarray(self.jump(i, z), dtype=complex).reshape(z.size, 2, 2)


@dataclass(frozen=True)
class JunctionMember:
    leg: int
    end: str  # 'L' or 'R'
    theta: float  # direction of the leg leaving the junction


@dataclass(frozen=True)
class Junction:
    point: complex
    members: tuple

    @property
    def is_isolated(self):
        return len(self.members) == 1


def find_junctions(legs, rtol=1e-10):
    """Group leg endpoints that coincide (relative to the contour's size)."""
    scale = max(max(abs(l.imap.a), abs(l.imap.b), l.imap.length) for l in legs)
    pts = []
    for i, leg in enumerate(legs):
        im = leg.imap
        pts.append((im.a, JunctionMember(i, "L", im.angle)))
        pts.append((im.b, JunctionMember(i, "R", float(np.angle(im.a - im.b)))))
    groups = []
    for p, mem in pts:
        for g in groups:
            if abs(g[0] - p) <= rtol * scale:
                g[1].append(mem)
                break
        else:
            groups.append([p, [mem]])
    return [Junction(complex(p), tuple(sorted(ms, key=lambda m: m.theta))) for p, ms in groups]


def outward_jumps(problem, junction):
    """Jumps at a junction with all legs oriented away from it, in counterclockwise order."""
    out = []
    for mem in junction.members:
        G = problem.jump_at(mem.leg, junction.point)[0]
        out.append(G if mem.end == "L" else np.linalg.inv(G))
    return out


def junction_product(problem, junction):
    P = I2.copy()
    for H in outward_jumps(problem, junction):
        P = P @ H
    return P


def check_jumps(problem, tol=1e-10):
    """Cyclic product of outward jumps must be the identity at every junction."""
    for jn in find_junctions(problem.legs):
        Hs = outward_jumps(problem, jn)
        P = I2.copy()
        for H in Hs:
            P = P @ H
        scale = np.prod([max(1.0, np.linalg.norm(H, 2)) for H in Hs])
        err = np.max(np.abs(P - I2))
        if err > tol * scale:
            raise JumpConsistencyError(
                f"jump product at junction {jn.point:.6g} differs from I by {err:.3g}"
            )


def junction_matrix(problem, junction):
    """(theta_1 + 2 pi - theta_L) I + sum_{i>=2} (theta_i - theta_{i-1}) H_i ... H_L."""
    Hs = outward_jumps(problem, junction)
    th = [m.theta for m in junction.members]
    L = len(Hs)
    M = (th[0] + 2 * np.pi - th[-1]) * I2
    for i in range(1, L):
        P = I2.copy()
        for H in Hs[i:]:
            P = P @ H
        M = M + (th[i] - th[i - 1]) * P
    return M


def _leg_nodes(problem, nodes):
    if np.isscalar(nodes) or nodes is None:
        ms = [leg.m or nodes or 40 for leg in problem.legs]
    else:
        ms = list(nodes)
    if len(ms) != len(problem.legs):
        raise ValueError("one node count per leg")
    return ms


@dataclass
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    points: np.ndarray
    leg_of_point: np.ndarray
    nodes: list
    offsets: np.ndarray
    replaced_junctions: list = field(default_factory=list)


def _cauchy_rows(problem, ms, pts, leg_of_pt, node_of_pt, junctions):
    """Matrix of C~^- values: rows are collocation points, columns the basis (leg, k)."""
    N = len(pts)
    offsets = np.concatenate([[0], np.cumsum(ms)])
    Cm = np.zeros((N, offsets[-1]), dtype=complex)
    # endpoint membership: point index -> junction
    end_of = {}
    for jn in junctions:
        for mem in jn.members:
            j = offsets[mem.leg] + (0 if mem.end == "L" else ms[mem.leg] - 1)
            end_of[j] = (jn, mem)
    for l, leg in enumerate(problem.legs):
        im = leg.imap
        K = ms[l]
        cols = slice(offsets[l], offsets[l + 1])
        own = leg_of_pt == l
        # own interior nodes: minus-side boundary values
        interior = own & (node_of_pt > 0) & (node_of_pt < K - 1)
        if np.any(interior):
            t = np.real(im.forward(pts[interior]))
            Cm[interior, cols] = cauchy._cauchy_std(K, t, side=-1)
        # own endpoints: one-sided finite part along the leg itself
        for end, node in (("L", 0), ("R", K - 1)):
            j = offsets[l] + node
            theta = im.angle if end == "L" else float(np.angle(im.a - im.b))
            Cm[j, cols] = cauchy.junction_table(K, im, end, theta, side=-1)
        # other legs' points
        others = np.nonzero(~own)[0]
        at_end = []
        generic = []
        for j in others:
            jn_mem = end_of.get(j)
            hit = None
            if jn_mem is not None:
                jn = jn_mem[0]
                for mem in jn.members:
                    if mem.leg == l:
                        hit = mem
            if hit is not None:
                at_end.append((j, hit, jn_mem[1].theta))
            else:
                generic.append(j)
        for j, mem, theta in at_end:
            Cm[j, cols] = cauchy.junction_table(K, im, mem.end, theta)
        if generic:
            generic = np.array(generic)
            x = im.forward(pts[generic])
            near = (np.abs(np.imag(x)) < 2e-9) & (np.abs(np.real(x)) < 1)
            if np.any(near):
                raise RHSolveError(f"collocation points of another leg lie on leg {l}")
            w = cauchy.inv_joukowski_exterior(x)
            Cm[generic, cols] = cauchy.cauchy_table(w, K)
    return Cm, offsets


def build_system(problem, nodes=None):
    """Assemble the collocation system; returns a LinearSystem (2N x 2N, two right-hand sides)."""
    ms = _leg_nodes(problem, nodes)
    if min(ms) < 2:
        raise ValueError("each leg needs at least 2 nodes")
    pts, leg_of_pt, node_of_pt = [], [], []
    for l, leg in enumerate(problem.legs):
        pts.append(cheb_points(ms[l], leg.imap))
        leg_of_pt.append(np.full(ms[l], l))
        node_of_pt.append(np.arange(ms[l]))
    pts = np.concatenate(pts).astype(complex)
    leg_of_pt = np.concatenate(leg_of_pt)
    node_of_pt = np.concatenate(node_of_pt)
    N = len(pts)
    junctions = find_junctions(problem.legs)
    Cm, offsets = _cauchy_rows(problem, ms, pts, leg_of_pt, node_of_pt, junctions)
    # T_k at own nodes
    Tm = np.zeros((N, N))
    for l in range(len(problem.legs)):
        K = ms[l]
        x = np.real(cheb_points(K))
        Tm[offsets[l] : offsets[l + 1], offsets[l] : offsets[l + 1]] = np.cos(
            np.outer(np.arccos(np.clip(x, -1, 1)), np.arange(K))
        )
    E = np.empty((N, 2, 2), dtype=complex)
    for l in range(len(problem.legs)):
        sl = slice(offsets[l], offsets[l + 1])
        E[sl] = problem.jump_at(l, pts[sl]) - I2
    if not np.all(np.isfinite(E)):
        raise RHSolveError("jump is not finite at some collocation node")
    # A[(j,q),(n,p)] = T[j,n] delta_pq - C[j,n] E[j,p,q]
    A = np.einsum("jn,pq->jqnp", Tm, I2) - np.einsum("jn,jpq->jqnp", Cm, E)
    A = A.reshape(2 * N, 2 * N)
    b = np.transpose(E, (0, 2, 1)).reshape(2 * N, 2)  # b[(j,q), r] = E[j, r, q]
    system = LinearSystem(A, b, pts, leg_of_pt, ms, offsets)
    _apply_zero_sum_fallback(problem, system, junctions)
    return system


def _apply_zero_sum_fallback(problem, system, junctions, tol=1e-10):
    ms, offsets = system.nodes, system.offsets
    for jn in junctions:
        if jn.is_isolated:
            continue
        M = junction_matrix(problem, jn)
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] > tol * max(s[0], 1.0):
            continue
        # replace the rows of the last (counterclockwise) member by S = 0
        last = jn.members[-1]
        j = offsets[last.leg] + (0 if last.end == "L" else ms[last.leg] - 1)
        rows = [2 * j, 2 * j + 1]
        system.matrix[rows, :] = 0
        system.rhs[rows, :] = 0
        for mem in jn.members:
            p = -1.0 if mem.end == "L" else 1.0
            Tend = (1.0 if mem.end == "R" else -1.0) ** np.arange(ms[mem.leg])
            for k in range(ms[mem.leg]):
                n = offsets[mem.leg] + k
                for q in range(2):
                    system.matrix[2 * j + q, 2 * n + q] += p * Tend[k]
        system.replaced_junctions.append(jn.point)
        log.debug("nonsingular junction condition fails at %s; using S = 0 row", jn.point)


def dump_system_csv(system, path, residual=None):
    """Write the collocation matrix (real, imag columns per entry) and optional residuals."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        rows, cols = np.nonzero(system.matrix)
        for r, c in zip(rows, cols):
            v = system.matrix[r, c]
            w.writerow([r, c, repr(float(v.real)), repr(float(v.imag))])
        if residual is not None:
            w.writerow([])
            w.writerow(["row", "residual"])
            for r, v in enumerate(residual):
                w.writerow([r, repr(float(v))])


class RHSolution:
    """Phi = I + C U with U stored as per-leg Chebyshev coefficient arrays (m_i, 2, 2)."""

    def __init__(self, problem, coeffs, condition=None):
        self.problem = problem
        self.coeffs = [np.asarray(c) for c in coeffs]
        self.condition = condition

    @property
    def legs(self):
        return self.problem.legs

    def density(self, i, z):
        """U on leg i at z (z on the leg)."""
        im = self.legs[i].imap
        return clenshaw(self.coeffs[i], np.real(im.forward(z)))

    def evaluate(self, z, side=+1):
        """Phi(z); points on a leg get the one-sided value selected by ``side``."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.tile(I2, (flat.size, 1, 1))
        for l, leg in enumerate(self.legs):
            c = self.coeffs[l]
            K = c.shape[0]
            x = leg.imap.forward(flat)
            on = (np.abs(np.imag(x)) < 2e-9) & (np.abs(np.real(x)) < 1)
            vals = np.zeros((flat.size, K), dtype=complex)
            if np.any(~on):
                vals[~on] = cauchy.cauchy_table(cauchy.inv_joukowski_exterior(x[~on]), K)
            if np.any(on):
                # rounding noise in Im x must not override the requested side
                ix = np.imag(x[on])
                sides = np.where(ix > 1e-13, 1, np.where(ix < -1e-13, -1, side))
                xr = np.real(x[on])
                idx = np.nonzero(on)[0]
                for sgn in (1, -1):
                    sel = sides == sgn
                    if np.any(sel):
                        vals[idx[sel]] = cauchy._cauchy_std(K, xr[sel], side=sgn)
            out = out + np.einsum("zk,kpq->zpq", vals, c)
        return out.reshape(z.shape + (2, 2))

    def __call__(self, z, side=+1):
        return self.evaluate(z, side)

    def moment(self):
        """lim_{z->inf} z (Phi(z) - I) = -(1/2 pi i) sum_legs int U dt."""
        total = np.zeros((2, 2), dtype=complex)
        for l, leg in enumerate(self.legs):
            c = self.coeffs[l]
            k = np.arange(c.shape[0])
            ints = np.zeros(len(k))
            even = k % 2 == 0
            ints[even] = 2 / (1 - k[even].astype(float) ** 2)
            total += 0.5 * (leg.imap.b - leg.imap.a) * np.einsum("k,kpq->pq", ints, c)
        return -total / (2j * np.pi)

    def zero_sum_residual(self):
        """max over junctions of |sum p_i U^i(zeta)|."""
        worst = 0.0
        for jn in find_junctions(self.legs):
            if jn.is_isolated:
                continue
            s = np.zeros((2, 2), dtype=complex)
            for mem in jn.members:
                c = self.coeffs[mem.leg]
                sgn = 1.0 if mem.end == "R" else -1.0
                s += sgn * np.einsum("k,kpq->pq", sgn ** np.arange(c.shape[0]), c)
            worst = max(worst, float(np.max(np.abs(s))))
        return worst


def _lu_condition(A, lu_piv):
    lu, piv = lu_piv
    anorm = np.linalg.norm(A, 1)
    gecon = sla.lapack.get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    return np.inf if rcond == 0 else 1 / rcond


def solve(problem, nodes=None, check=True, cond_warn=1e12):
    """Solve [G; Gamma] by collocation; returns an RHSolution."""
    if check:
        check_jumps(problem)
    system = build_system(problem, nodes)
    A = system.matrix
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            lu_piv = sla.lu_factor(A, check_finite=True)
    except (sla.LinAlgWarning, ValueError, np.linalg.LinAlgError) as exc:
        raise RHSolveError(f"singular collocation system: {exc}") from exc
    cond = _lu_condition(A, lu_piv)
    if not np.isfinite(cond):
        raise RHSolveError("singular collocation system (condition estimate infinite)")
    if cond > cond_warn:
        warnings.warn(f"ill-conditioned collocation system, condition ~ {cond:.2e}")
    X = sla.lu_solve(lu_piv, system.rhs)
    coeffs = []
    for l, K in enumerate(system.nodes):
        o = system.offsets[l]
        block = X[2 * o : 2 * (o + K)].reshape(K, 2, 2)  # [k, p, r]
        coeffs.append(np.transpose(block, (0, 2, 1)))  # U_k[r, p]
    return RHSolution(problem, coeffs, cond)


def jump_residual(solution, per_leg=16):
    """max |Phi+ - Phi- G| at points between collocation nodes."""
    worst = 0.0
    for l, leg in enumerate(solution.legs):
        t = np.cos(np.pi * (np.arange(per_leg) + 0.5) / per_leg)
        z = leg.imap.inverse(t)
        Pp = solution.evaluate(z, side=+1)
        Pm = solution.evaluate(z, side=-1)
        G = solution.problem.jump_at(l, z)
        worst = max(worst, float(np.max(np.abs(Pp - Pm @ G))))
    return worst


def cauchy_error(problem, m, check=False):
    """max |U_m - U_2m| at the 2m-point collocation nodes of every leg."""
    s1 = solve(problem, m, check=check)
    s2 = solve(problem, 2 * m, check=check)
    worst = 0.0
    for l, leg in enumerate(problem.legs):
        z = cheb_points(2 * m, leg.imap)
        worst = max(worst, float(np.max(np.abs(s1.density(l, z) - s2.density(l, z)))))
    return worst


def adaptive_solve(problem, m0=40, tol=1e-10, mmax=320):
    """Double m until the Cauchy error drops below tol; returns (solution, m, error)."""
    m = m0
    check_jumps(problem)
    while True:
        s1 = solve(problem, m, check=False)
        s2 = solve(problem, 2 * m, check=False)
        err = 0.0
        for l, leg in enumerate(problem.legs):
            z = cheb_points(2 * m, leg.imap)
            err = max(err, float(np.max(np.abs(s1.density(l, z) - s2.density(l, z)))))
        if err < tol or 2 * m > mmax:
            return s2, 2 * m, err
        m *= 2


def min_nodes(problem, tol=1e-10, candidates=range(8, 161, 4)):
    """Smallest per-leg m in ``candidates`` whose Cauchy error (m vs 2m) is below tol."""
    for m in candidates:
        if cauchy_error(problem, m) < tol:
            return m
    return None


def _seg_distance(z, a, b):
    d = b - a
    t = np.clip(np.real((z - a) * np.conj(d)) / abs(d) ** 2, 0, 1)
    return np.abs(z - (a + t * d))


def truncate(problem, tol):
    """Shorten legs to where ||G - I|| >= tol; legs with G ~ I everywhere are dropped.

    Each leg is sampled at 64 points; the cut between the last sample above tol
    and the first below it is refined by bisection.  Cut legs stay straight
    segments between their (new) endpoints.
    """
    if tol <= 0:
        return problem
    s = np.linspace(0, 1, 64)
    new_legs = []
    index = []

    def size(i, leg, t):
        z = leg.imap.a + np.atleast_1d(t) * (leg.imap.b - leg.imap.a)
        return np.max(np.abs(problem.jump_at(i, z) - I2), axis=(1, 2))

    def refine(i, leg, inside, outside):
        for _ in range(60):
            mid = 0.5 * (inside + outside)
            if size(i, leg, mid)[0] >= tol:
                inside = mid
            else:
                outside = mid
        return outside

    for i, leg in enumerate(problem.legs):
        vals = size(i, leg, s)
        big = np.nonzero(vals >= tol)[0]
        if big.size == 0:
            continue
        lo, hi = s[big[0]], s[big[-1]]
        if big[0] > 0:
            lo = refine(i, leg, lo, s[big[0] - 1])
        if big[-1] < len(s) - 1:
            hi = refine(i, leg, hi, s[big[-1] + 1])
        a, b = leg.imap.a, leg.imap.b
        na, nb = a + lo * (b - a), a + hi * (b - a)
        if na == nb:
            continue
        new_legs.append(ContourLeg(IntervalMap(complex(na), complex(nb)), leg.m))
        index.append(i)

    def jump(j, z):
        return problem.jump_at(index[j], z)

    return RHProblem(new_legs, jump, problem.name)


class ProductSolution:
    """Phi = Phi_l ... Phi_1 from the sequential scaled solver."""

    def __init__(self, stages):
        self.stages = list(stages)

    def evaluate(self, z, side=+1):
        z = np.asarray(z, dtype=complex)
        out = np.broadcast_to(I2, z.shape + (2, 2)).copy()
        for st in self.stages:
            out = st.evaluate(z, side) @ out
        return out

    __call__ = evaluate

    def moment(self):
        return sum(st.moment() for st in self.stages)


class _ShiftedSolution:
    # Phi(z) = Phi_local((z - beta)/alpha)
    def __init__(self, sol, alpha, beta):
        self.sol, self.alpha, self.beta = sol, alpha, beta

    def evaluate(self, z, side=+1):
        return self.sol.evaluate((np.asarray(z) - self.beta) / self.alpha, side)

    def moment(self):
        return self.alpha * self.sol.moment()


class Conjugation:
    """Constant conjugation of one stage: Phi = C Q C^{-1} outside a region, C Q inside.

    ``inner_legs`` are the legs that bound the region with the region on their
    + side; their jumps become C^{-1} G, all others C^{-1} G C.
    """

    def __init__(self, C, inner_legs, inside):
        self.C = np.asarray(C, dtype=complex)
        self.Cinv = np.linalg.inv(self.C)
        self.inner_legs = frozenset(inner_legs)
        self.inside = inside

    def jump(self, i, G):
        if i in self.inner_legs:
            return self.Cinv @ G
        return self.Cinv @ G @ self.C


class _ConjugatedSolution:
    def __init__(self, inner, conj):
        self.inner, self.conj = inner, conj

    @property
    def sol(self):
        return self.inner.sol

    def evaluate(self, z, side=+1):
        z = np.asarray(z, dtype=complex)
        Q = self.inner.evaluate(z, side)
        out = self.conj.C @ Q
        ins = np.asarray(self.conj.inside(z), dtype=bool).reshape(z.shape)
        out[~ins] = out[~ins] @ self.conj.Cinv
        return out

    def moment(self):
        return self.conj.C @ self.inner.moment() @ self.conj.Cinv


def scaled_solve(pieces, nodes=None, check=True):
    """Sequential solve over disjoint pieces.

    ``pieces`` is a list of (problem, alpha, beta) or (problem, alpha, beta,
    Conjugation): each problem is given in global coordinates and solved in
    local ones k = (z - beta)/alpha.  Stage j uses the jump
    Phi_{j-1}...Phi_1 G_j (Phi_{j-1}...Phi_1)^{-1} and the result is
    Phi = Phi_l ... Phi_1.
    """
    stages = []
    for idx, piece in enumerate(pieces):
        prob, alpha, beta = piece[:3]
        conj = piece[3] if len(piece) > 3 else None
        prev = ProductSolution(stages)

        def local_jump(i, k, prob=prob, alpha=alpha, beta=beta, prev=prev, conj=conj):
            z = alpha * np.asarray(k) + beta
            G = prob.jump_at(i, z)
            if prev.stages:
                P = prev.evaluate(z)
                G = P @ G @ np.linalg.inv(P)
            return G if conj is None else conj.jump(i, G)

        legs = [
            ContourLeg(IntervalMap((l.imap.a - beta) / alpha, (l.imap.b - beta) / alpha), l.m)
            for l in prob.legs
        ]
        local = RHProblem(legs, local_jump, f"{prob.name}[stage {idx + 1}]")
        try:
            sol = solve(local, nodes, check=check)
        except RHSolveError as exc:
            raise RHSolveError(f"stage {idx + 1} failed: {exc}") from exc
        st = _ShiftedSolution(sol, alpha, beta)
        stages.append(st if conj is None else _ConjugatedSolution(st, conj))
    return ProductSolution(stages)
