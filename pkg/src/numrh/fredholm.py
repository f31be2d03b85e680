"""Fredholm determinants det(I - K) by Gauss-Legendre Nystrom discretisation,
gap probabilities for unitary ensembles and a GUE Monte-Carlo sampler."""

from dataclasses import dataclass

import numpy as np

from .airyval import airy

DEFAULT_SEED = 20130101


@dataclass(frozen=True)
class DeterminantResult:
    value: float
    m: int
    error: float  # |det_m - det_2m|

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class GapQuery:
    """kind: 'plain' (window (lo, hi) = center + (-s, s)), 'bulk' or 'edge'."""

    kind: str
    s: float
    center: float = 0.0
    scaling: str = "kernel-diag"  # or 'asymptotic-density'


def gauss_legendre(m, lo=-1.0, hi=1.0):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _det_once(kmat, lo, hi, m):
    x, w = gauss_legendre(m, lo, hi)
    K = np.asarray(kmat(x, x), dtype=float)
    if not np.all(np.isfinite(K)):
        raise FloatingPointError("non-finite kernel sample")
    sw = np.sqrt(w)
    return float(np.linalg.det(np.eye(m) - sw[:, None] * K * sw[None, :]))


def fredholm_det(kernel, interval, m=40, estimate=True):
    """det(I - K) on L^2(lo, hi); ``kernel(x, y)`` must accept node vectors and return the matrix."""
    lo, hi = map(float, interval)
    if hi <= lo:
        return DeterminantResult(1.0, m, 0.0)
    d = _det_once(kernel, lo, hi, m)
    err = abs(d - _det_once(kernel, lo, hi, 2 * m)) if estimate else float("nan")
    return DeterminantResult(d, m, err)


def outer_kernel(f):
    """Kernel matrix builder from a pointwise symmetric kernel f(x, y)."""
    return lambda x, y: f(x[:, None], y[None, :])


def sine_kernel(x, y, pi_scaled=True):
    """sin(pi(x - y))/(pi(x - y)), or sin(x - y)/(x - y) if not pi_scaled; 1 on the diagonal."""
    d = np.subtract.outer(x, y)
    return np.sinc(d if pi_scaled else d / np.pi)


def sine_det(s, m=40, pi_scaled=True):
    """det(I - S) on (-s, s) for the unit-density sine kernel.

    The unscaled kernel sin(x - y)/(x - y) is pi times a projection, so its
    determinant is not a probability once s > pi/2 or so; it is kept behind
    pi_scaled=False.
    """
    if s <= 0:
        return DeterminantResult(1.0, m, 0.0)
    return fredholm_det(lambda x, y: sine_kernel(x, y, pi_scaled), (-s, s), m)


def airy_kernel(x, y):
    """(Ai(x)Ai'(y) - Ai'(x)Ai(y))/(x - y), with Ai'(x)^2 - x Ai(x)^2 on the diagonal."""
    ax, apx = (np.real(v) for v in airy(np.asarray(x, dtype=float)))
    ay, apy = (np.real(v) for v in airy(np.asarray(y, dtype=float)))
    d = np.subtract.outer(x, y)
    num = np.outer(ax, apy) - np.outer(apx, ay)
    close = np.abs(d) < 1e-9
    with np.errstate(divide="ignore", invalid="ignore"):
        K = num / d
    if np.any(close):
        i, j = np.nonzero(close)
        xm = 0.5 * (np.asarray(x)[i] + np.asarray(y)[j])
        a, ap = (np.real(v) for v in airy(xm))
        K[i, j] = ap**2 - xm * a**2
    return K


def airy_det(s, m=60, x_max=None):
    """Tracy-Widom F_2(s) = det(I - A) on (s, inf), truncated at max(s + 1, 14)."""
    if x_max is None:
        x_max = max(s + 1.0, 14.0)
    return fredholm_det(airy_kernel, (s, x_max), m)


def _edge_window(handle, q):
    eqm = handle.system.eqm
    n = handle.n
    c = eqm.c
    if not np.isfinite(c):
        raise ValueError("edge scaling requested at a degenerate edge")
    lo = eqm.b + q.s / (c * n ** (2 / 3))
    # truncate where the diagonal falls below 1e-16
    step = max(eqm.b - eqm.a, 1.0) * 0.25
    hi = max(lo, eqm.b) + step
    for _ in range(200):
        if handle.diag(np.array([hi]))[0] < 1e-16:
            break
        hi += step
    return lo, hi


def gap_window(handle, q):
    if q.kind == "plain":
        return q.center - q.s, q.center + q.s
    if q.kind == "bulk":
        if q.scaling == "kernel-diag":
            rho = handle.diag(np.array([q.center]))[0]
        else:
            rho = handle.n * handle.system.eqm.density(np.array([q.center]))[0]
        return q.center - q.s / rho, q.center + q.s / rho
    if q.kind == "edge":
        return _edge_window(handle, q)
    raise ValueError(f"unknown gap kind {q.kind!r}")


def gap_statistic(handle, q, m=40, estimate=True):
    """Probability of no eigenvalue in the window described by q."""
    if q.s == 0 and q.kind != "edge":
        return DeterminantResult(1.0, m, 0.0)
    lo, hi = gap_window(handle, q)
    return fredholm_det(handle.matrix, (lo, hi), m, estimate)


def level_density(handle, grid):
    """K_n(x, x)/n on the grid."""
    return handle.diag(np.asarray(grid, dtype=float)) / handle.n


def gue_matrix(n, rng):
    """Hermitian matrix with density proportional to exp(-n tr M^2)."""
    d = rng.normal(0.0, np.sqrt(1 / (2 * n)), n)
    re = rng.normal(0.0, np.sqrt(1 / (4 * n)), (n, n))
    im = rng.normal(0.0, np.sqrt(1 / (4 * n)), (n, n))
    M = np.triu(re + 1j * im, 1)
    M = M + M.conj().T
    M[np.diag_indices(n)] = d
    return M


def gue_sample(n, trials, seed=DEFAULT_SEED):
    """Eigenvalues (trials x n) of independent GUE matrices; trial i uses Philox stream i."""
    base = np.random.Philox(seed)
    out = np.empty((trials, n))
    for t in range(trials):
        rng = np.random.Generator(base.jumped(t + 1))
        out[t] = np.linalg.eigvalsh(gue_matrix(n, rng))
    return out


def empirical_gap(eigs, lo, hi):
    """Fraction of samples with no eigenvalue in (lo, hi), and its binomial standard error."""
    empty = ~np.any((eigs > lo) & (eigs < hi), axis=1)
    p = float(np.mean(empty))
    return p, float(np.sqrt(max(p * (1 - p), 1e-300) / eigs.shape[0]))


def gap_zscore(p_model, eigs, lo, hi):
    """|p_model - p_empirical| in units of the binomial standard error at p_model.

    The error is taken at the predicted probability, so the score stays defined
    when no sample is empty.
    """
    p, _ = empirical_gap(eigs, lo, hi)
    se = np.sqrt(max(p_model * (1 - p_model), 0.0) / eigs.shape[0])
    if se == 0:
        return 0.0 if p == p_model else float("inf")
    return float(abs(p_model - p) / se)
