"""Acceptance suite: ten end-to-end criteria at their stated tolerances.

Each test prints one PASS/FAIL line.  Run ``python tests/test_acceptance.py``
for the summary alone, or ``pytest tests/test_acceptance.py -v``.
"""

import sys
import time

import numpy as np
import pytest
from scipy.integrate import quad

from numrh.airyval import cauchy_error_experiment
from numrh.cauchy import cauchy_basis, cauchy_basis_boundary, cauchy_basis_junction, junction_constants
from numrh.chebcore import IntervalMap
from numrh.equilibrium import equilibrium_measure
from numrh.fredholm import (
    GapQuery,
    airy_det,
    fredholm_det,
    gap_statistic,
    gap_window,
    gap_zscore,
    gue_sample,
    outer_kernel,
    sine_det,
)
from numrh.oprh import min_nodes_op, solve_op
from numrh.painleve2 import StokesTriple, ode_residual, pii

HM = StokesTriple.hastings_mcleod()


def _report(num, ok, detail, seconds, log=print):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {detail} ({seconds:.1f} s)"
    log(line)
    return line


def hermite_monic(n, N, x):
    """Monic OPs for e^{-N x^2} from the recurrence with b_k = k/(2N)."""
    x = np.asarray(x, dtype=float)
    p0, p1 = np.ones_like(x), x.copy()
    if n == 0:
        return p0
    for k in range(1, n):
        p0, p1 = p1, x * p1 - k / (2 * N) * p0
    return p1


def criterion_1():
    eqm = equilibrium_measure("gue")
    r2 = np.sqrt(2)
    errs = [abs(eqm.a + r2), abs(eqm.b - r2), abs(eqm.density(np.array([0.0]))[0] - r2 / np.pi), abs(eqm.c - r2)]
    return max(errs) < 1e-9, f"GUE a, b, density(0), c max error {max(errs):.1e}"


def criterion_2():
    x = np.linspace(-2, 2, 10)
    worst_p = worst_g = 0.0
    for n in (3, 10, 20):
        s = solve_op("gue", n)
        ref = hermite_monic(n, n, x)
        worst_p = max(worst_p, float(np.max(np.abs(s.pi_n(x) - ref) / np.abs(ref))))
        norm = quad(
            lambda t: hermite_monic(n - 1, n, t) ** 2 * np.exp(-n * t * t), -np.inf, np.inf, epsabs=0, epsrel=1e-13
        )[0]
        # lim z^{1-n} Y_21 = -2 pi i / ||pi_{n-1}||^2
        g_ref = -2j * np.pi / norm
        worst_g = max(worst_g, abs(s.gamma - g_ref) / abs(g_ref))
    ok = worst_p < 1e-7 and worst_g < 1e-7
    return ok, f"Hermite pi_n rel. error {worst_p:.1e}, gamma rel. error {worst_g:.1e}"


def criterion_3():
    worst = 0.0
    for pot in ("gue", "degenerate-quartic"):
        for n in (3, 10):
            s = solve_op(pot, n)
            h = s.kernel_handle()
            eqm = s.eqm
            lo, hi = eqm.a - 2.5, eqm.b + 2.5
            mass = quad(lambda t: h.diag(np.array([t]))[0], lo, hi, limit=200, epsabs=1e-12, epsrel=1e-12)[0]
            worst = max(worst, abs(mass - n))
    return worst < 1e-6, f"|int K_n(x,x) dx - n| max {worst:.1e}"


def criterion_4():
    n, trials = 50, 4000
    s = solve_op("gue", n, m=80)
    h = s.kernel_handle()
    eigs = gue_sample(n, trials)
    zs = []
    for sv in (0.05, 0.1, 0.2):
        q = GapQuery("plain", sv)
        p = gap_statistic(h, q).value
        zs.append(gap_zscore(p, eigs, *gap_window(h, q)))
    return max(zs) <= 3, "z-scores " + ", ".join(f"{z:.2f}" for z in zs)


def criterion_5():
    m10 = min_nodes_op("gue", 10)
    m320 = min_nodes_op("gue", 320)
    ok = m10 is not None and m320 is not None and m320 <= m10 + 8
    return ok, f"m(n=10) = {m10}, m(n=320) = {m320}"


def criterion_6():
    rows = cauchy_error_experiment([20, 50, 100, 200], m=10)
    errs = [e for _, e in rows]
    bad = sum(1 for a, b in zip(errs, errs[1:]) if not b < a)
    return bad <= 1, "errors " + ", ".join(f"{e:.1e}" for e in errs) + f" ({bad} non-monotone steps)"


def criterion_7():
    u10 = pii(HM, -10.0).real
    e10 = abs(u10 + np.sqrt(5))
    plateau = [abs((pii(HM, x).real + np.sqrt(-x / 2)) / x ** (-2.5)) for x in (-15.0, -20.0, -25.0, -30.0)]
    spread = (max(plateau) - min(plateau)) / min(plateau)
    xs = np.linspace(-5, 3, 10)
    res = max(ode_residual(lambda t: pii(HM, t).real, x)[0] for x in xs)
    ok = e10 < 0.02 and spread < 0.2 and res < 1e-4
    return ok, f"|u(-10) + sqrt 5| = {e10:.1e}, plateau spread {spread:.1%}, ODE residual {res:.1e}"


def criterion_8():
    svals = (-1.0, 0.0, 1.0)
    ref = {sv: airy_det(sv).value for sv in svals}
    errs = {sv: [] for sv in svals}
    for n in (10, 20, 40, 80):
        h = solve_op("exp-linear", n).kernel_handle()
        for sv in svals:
            errs[sv].append(abs(gap_statistic(h, GapQuery("edge", sv)).value - ref[sv]))
    ok = all(all(b < a for a, b in zip(e, e[1:])) for e in errs.values())
    detail = "; ".join(f"s={sv:+.0f}: {e[0]:.1e} -> {e[-1]:.1e}" for sv, e in errs.items())
    return ok, detail


def criterion_9():
    rng = np.random.default_rng(9)
    rank1 = 0.0
    for _ in range(5):
        cf, cg = rng.normal(size=3), rng.normal(size=3)
        f = np.polynomial.Polynomial(cf)
        g = np.polynomial.Polynomial(cg)
        lo, hi = sorted(rng.uniform(-2, 2, 2))
        exact = 1 - ((f * g).integ()(hi) - (f * g).integ()(lo))
        d = fredholm_det(outer_kernel(lambda x, y: f(x) * g(y)), (lo, hi), m=20).value
        rank1 = max(rank1, abs(d - exact))
    d0 = abs(sine_det(0.0).value - 1)
    dets = [sine_det(s) for s in np.linspace(0.05, 3, 12)] + [airy_det(s) for s in np.linspace(-4, 3, 12)]
    h = solve_op("gue", 10).kernel_handle()
    dets += [gap_statistic(h, GapQuery("plain", s)) for s in (0.1, 0.4, 0.8)]
    vals = np.array([d.value for d in dets])
    rng_ok = bool(np.all((vals > -1e-8) & (vals < 1 + 1e-8)))
    selfconv = max(d.error for d in dets)
    ok = rank1 < 1e-12 and d0 < 1e-15 and rng_ok and selfconv < 1e-8
    return ok, f"rank-one {rank1:.1e}, |sine_det(0) - 1| {d0:.1e}, range ok {rng_ok}, m vs 2m {selfconv:.1e}"


def _quad_cauchy(k, imap, z):
    def f(t, part):
        x = imap.inverse(t)
        v = np.cos(k * np.arccos(t)) / (x - z) * 0.5 * (imap.b - imap.a) / (2j * np.pi)
        return v.real if part == 0 else v.imag

    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=400)
    return quad(f, -1, 1, args=(0,), **opts)[0] + 1j * quad(f, -1, 1, args=(1,), **opts)[0]


def criterion_10():
    imap = IntervalMap(-0.5 - 0.3j, 1.2 + 0.4j)
    pts = imap.inverse(np.linspace(-1.3, 1.4, 10)) + 0.4j * np.exp(1j * imap.angle) * np.cos(np.arange(10))
    q_err = 0.0
    for k in range(11):
        got = cauchy_basis(k, imap, pts)
        ref = np.array([_quad_cauchy(k, imap, z) for z in pts])
        q_err = max(q_err, float(np.max(np.abs(got - ref))))
    t = np.linspace(-0.95, 0.95, 10)
    x = imap.inverse(t)
    p_err = 0.0
    for k in range(11):
        jump = cauchy_basis_boundary(k, imap, x, +1) - cauchy_basis_boundary(k, imap, x, -1)
        p_err = max(p_err, float(np.max(np.abs(jump - np.cos(k * np.arccos(t))))))
    # finite parts against C(c + eps e^{i theta}) - r log eps, extrapolated to eps = 0
    eps = np.logspace(-3, -7, 13)
    basis = np.stack([np.ones_like(eps), eps, eps * np.log(eps), eps**2, eps**2 * np.log(eps)], 1).astype(complex)
    j_err = 0.0
    for im in (IntervalMap(-1.0, 1.0), IntervalMap(1 + 1j, 3 - 0.5j), imap):
        for end, c in (("L", im.a), ("R", im.b)):
            for th in (0.3, 1.9, -2.5, im.angle + np.pi / 2):
                for k in range(11):
                    _, r = junction_constants(k, end, im)
                    f = cauchy_basis(k, im, c + eps * np.exp(1j * th)) - r * np.log(eps)
                    lim = np.linalg.lstsq(basis, f, rcond=None)[0][0]
                    j_err = max(j_err, abs(lim - cauchy_basis_junction(k, im, end, th)))
    ok = q_err < 1e-10 and p_err < 1e-11 and j_err < 1e-7
    return ok, f"quadrature {q_err:.1e}, Plemelj {p_err:.1e}, junction finite parts {j_err:.1e}"


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 11)}
BUDGET = {1: 1.0, 2: 30.0, 4: 300.0, 6: 120.0, 7: 120.0}


def run(num, log=print):
    t0 = time.perf_counter()
    ok, detail = CRITERIA[num]()
    dt = time.perf_counter() - t0
    budget = BUDGET.get(num)
    if budget is not None and dt > budget:
        ok, detail = False, detail + f"; over the {budget:.0f} s budget"
    _report(num, ok, detail, dt, log)
    return ok, detail


@pytest.mark.parametrize("num", range(1, 11))
def test_acceptance(num, acceptance_log):
    ok, detail = run(num, acceptance_log)
    assert ok, detail


if __name__ == "__main__":
    results = [run(i)[0] for i in range(1, 11)]
    sys.exit(0 if all(results) else 1)
