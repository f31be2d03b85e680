"""Batch command line: equilibrium measures, densities, gap curves, P_II and the Airy experiment.

Data commands write ``<command>-<tag>.csv`` and ``<command>-<tag>.json`` into
``--out``.  The tag is a hash of the run parameters, and the JSON manifest
records the sha256 of each data file, so every CSV links to exactly one
manifest.  Nothing is written until all values are computed.

Exit codes: 0 ok, 2 input or convergence error, 3 unsupported configuration.
"""

import argparse
import hashlib
import json
import os
import sys
import tempfile
from fractions import Fraction

import numpy as np

from . import __version__
from .airyval import UnsupportedPotentialError, cauchy_error_experiment
from .equilibrium import DegenerateEdgeError, Potential, SupportError, equilibrium_measure, named_potential
from .fredholm import DEFAULT_SEED, GapQuery, empirical_gap, gap_statistic, gap_window, gue_sample
from .oprh import solve_op
from .painleve2 import StokesError, StokesTriple, UnsupportedDeformationError, pii, regime
from .rhsolver import RHSolveError

SCHEMA_VERSION = 1
EXIT_INPUT, EXIT_UNSUPPORTED = 2, 3


class UsageError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------- parsing


def parse_potential(text):
    """Named potential or 'poly:c0,c1,...' with ascending coefficients (fractions allowed)."""
    text = text.strip()
    if not text.startswith("poly:"):
        return named_potential(text)
    body = text[5:]
    try:
        coeffs = [Fraction(c.strip()) for c in body.split(",")]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"malformed polynomial coefficients {body!r}") from None
    if len(coeffs) < 3 or coeffs[-1] <= 0 or (len(coeffs) - 1) % 2:
        raise UsageError("polynomial potential needs even degree >= 2 and a positive leading coefficient")
    return Potential.polynomial([float(c) for c in coeffs], text)


def _parse_complex(tok):
    tok = tok.strip().replace(" ", "")
    if tok.endswith("i"):
        head = tok[:-1]
        if head in ("", "+", "-"):
            head += "1"
        # split a trailing imaginary part from an optional real part
        cut = max(head.rfind("+", 1), head.rfind("-", 1))
        if cut > 0 and head[cut - 1] not in "eE":
            return complex(float(head[:cut]), float(head[cut:]))
        return complex(0.0, float(head))
    return complex(float(tok), 0.0)


def parse_stokes(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError("--stokes needs three comma-separated values s1,s2,s3")
    try:
        return StokesTriple(*(_parse_complex(p) for p in parts))
    except ValueError as exc:
        raise UsageError(f"bad Stokes triple {text!r}: {exc}") from None


def parse_int_list(text):
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None
    if any(v <= 0 for v in vals):
        raise UsageError("n values must be positive")
    return vals


def parse_grid(text):
    try:
        lo, hi, count = text.split(",")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise UsageError(f"--grid expects lo,hi,count, got {text!r}") from None
    if not hi > lo or count < 2:
        raise UsageError("--grid needs lo < hi and count >= 2")
    return lo, hi, count


# ---------------------------------------------------------------- output


def fmt(x):
    return format(float(x), ".17g")


def csv_text(header, rows):
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else fmt(v) for v in r))
    return "\n".join(lines) + "\n"


def atomic_write(path, data):
    """Write bytes to path via a temporary file in the same directory."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_tag(command, params):
    blob = json.dumps({"command": command, "params": params}, sort_keys=True).encode("ascii")
    return hashlib.sha256(blob).hexdigest()[:12]


def emit(args, params, header, rows, plot=None):
    """Write the CSV and its manifest; returns the manifest path."""
    tag = run_tag(args.command, params)
    stem = f"{args.command}-{tag}"
    data = csv_text(header, rows).encode("ascii")
    csv_path = os.path.join(args.out, stem + ".csv")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "numrh_version": __version__,
        "command": args.command,
        "params": params,
        "tag": tag,
        "outputs": [{"path": stem + ".csv", "sha256": hashlib.sha256(data).hexdigest(), "rows": len(rows)}],
    }
    figure = None
    if args.plot and plot is not None:
        figure = stem + ".png"
        manifest["figures"] = [figure]
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    atomic_write(csv_path, data)
    if figure is not None:
        from .plotting import save_figure

        save_figure(os.path.join(args.out, figure), *plot)
    man_path = os.path.join(args.out, stem + ".json")
    atomic_write(man_path, text.encode("ascii"))
    print(man_path)
    return man_path


def common_params(args):
    return {"m": args.m, "tol": args.tol, "seed": args.seed}


# ---------------------------------------------------------------- commands


def cmd_eqm(args):
    pot = parse_potential(args.potential)
    eqm = equilibrium_measure(pot, tol=args.tol or 1e-12)
    x = np.linspace(eqm.a, eqm.b, args.samples)
    rho = eqm.density(x)
    c = eqm.c
    out = {
        "schema_version": SCHEMA_VERSION,
        "potential": args.potential,
        "a": eqm.a,
        "b": eqm.b,
        "ell": eqm.ell,
        "c": None if not np.isfinite(c) else c,
        "Vk": [float(v) for v in eqm.Vk],
        "density": {"x": [float(v) for v in x], "rho": [float(v) for v in rho]},
    }
    text = json.dumps(out, indent=2) + "\n"
    if args.out is not None:
        params = {"potential": args.potential, "samples": args.samples, **common_params(args)}
        tag = run_tag("eqm", params)
        stem = f"eqm-{tag}"
        data = text.encode("ascii")
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "numrh_version": __version__,
            "command": "eqm",
            "params": params,
            "tag": tag,
            "outputs": [{"path": stem + ".data.json", "sha256": hashlib.sha256(data).hexdigest()}],
        }
        atomic_write(os.path.join(args.out, stem + ".data.json"), data)
        atomic_write(
            os.path.join(args.out, stem + ".json"), (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode()
        )
    sys.stdout.write(text)


def _system(args):
    if args.n <= 0:
        raise UsageError("--n must be a positive integer")
    pot = parse_potential(args.potential)
    return solve_op(pot, args.n, m=args.m, tol=args.tol or 1e-10)


def cmd_density(args):
    sysm = _system(args)
    eqm = sysm.eqm
    if args.grid is None:
        pad = max(0.15, 1.5 / sysm.n) * (eqm.b - eqm.a)
        lo, hi, count = eqm.a - pad, eqm.b + pad, 201
    else:
        lo, hi, count = parse_grid(args.grid)
    x = np.linspace(lo, hi, count)
    rho = sysm.kernel_handle().diag(x) / sysm.n
    mass = float(np.sum((rho[1:] + rho[:-1]) * np.diff(x)) / 2)
    print(f"mass {fmt(mass)} (trapezoid over [{fmt(lo)}, {fmt(hi)}])", file=sys.stderr)
    params = {"potential": args.potential, "n": args.n, "grid": [lo, hi, count], **common_params(args)}
    rows = list(zip(x, rho))
    emit(args, params, ["x", "density"], rows, plot=(x, [rho], ["K_n(x,x)/n"], "x", "density"))


def cmd_gap(args):
    if args.n <= 0:
        raise UsageError("--n must be a positive integer")
    if args.ns < 2:
        raise UsageError("--ns must be at least 2")
    pot = parse_potential(args.potential)
    smin = args.smin if args.smin is not None else (-args.smax if args.kind == "edge" else 0.0)
    s = np.linspace(smin, args.smax, args.ns)
    sysm = _system(args)
    if args.kind == "edge" and not np.isfinite(sysm.eqm.c):
        raise DegenerateEdgeError("edge scaling needs a soft right edge")
    if args.mc and pot.name != "gue":
        raise UnsupportedPotentialError("Monte-Carlo comparison is available for GUE only")
    handle = sysm.kernel_handle()
    eigs = gue_sample(args.n, args.mc, args.seed) if args.mc else None
    header = ["s", "lo", "hi", "probability", "error"]
    rows = []
    for si in s:
        q = GapQuery(args.kind, float(si), args.center)
        lo, hi = gap_window(handle, q)
        res = gap_statistic(handle, q, m=args.quad)
        row = [si, lo, hi, res.value, res.error]
        if eigs is not None:
            row += list(empirical_gap(eigs, lo, hi))
        rows.append(row)
    if eigs is not None:
        header += ["empirical", "empirical_se"]
    params = {
        "potential": args.potential,
        "n": args.n,
        "kind": args.kind,
        "s": [smin, args.smax, args.ns],
        "center": args.center,
        "quad": args.quad,
        "mc": args.mc,
        **common_params(args),
    }
    curves = [np.array([r[3] for r in rows])]
    emit(args, params, header, rows, plot=(s, curves, ["det(I - K)"], "s", "gap probability"))


def cmd_pii(args):
    st = parse_stokes(args.stokes)
    if not args.xmax > args.xmin or args.nx < 2:
        raise UsageError("need xmin < xmax and nx >= 2")
    m = args.m or 40
    x = np.linspace(args.xmin, args.xmax, args.nx)
    u = np.array([pii(st, float(xi), m) for xi in x])
    # convergence check against a doubled node count at the ends of the grid
    for xi, ui in ((x[0], u[0]), (x[-1], u[-1])):
        d = abs(pii(st, float(xi), 2 * m) - ui)
        if d > args.tol:
            raise ConvergenceError(f"u({fmt(xi)}) changes by {d:.3g} > tol when m is doubled; raise --m")
    rows = [(xi, ui.real, ui.imag, regime(xi)) for xi, ui in zip(x, u)]
    params = {"stokes": args.stokes, "x": [args.xmin, args.xmax, args.nx], **common_params(args), "m": m}
    emit(args, params, ["x", "re_u", "im_u", "regime"], rows, plot=(x, [u.real], ["Re u"], "x", "u(x)"))


def cmd_airy_experiment(args):
    ns = parse_int_list(args.n)
    m = args.m or 10
    rows = cauchy_error_experiment(ns, args.potential, m)
    out = [(n, err, "yes" if err < args.tol else "no") for n, err in rows]
    params = {"potential": args.potential, "n": ns, **common_params(args), "m": m}
    emit(
        args,
        params,
        ["n", "cauchy_error", "below_tol"],
        out,
        plot=(np.array(ns, dtype=float), [np.array([r[1] for r in rows])], ["|U_m - U_2m|"], "n", "error", True),
    )


# ---------------------------------------------------------------- entry point


def build_parser():
    p = argparse.ArgumentParser(prog="numrh", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol):
        sp.add_argument("--m", type=int, default=None, help="collocation nodes per leg (default: adaptive)")
        sp.add_argument("--tol", type=float, default=tol, help="convergence tolerance")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed")
        sp.add_argument("--plot", action="store_true", help="also render a PNG figure (needs matplotlib)")

    sp = sub.add_parser("eqm", help="equilibrium measure as JSON")
    sp.add_argument("--potential", default="gue")
    sp.add_argument("--samples", type=int, default=33)
    sp.add_argument("--out", default=None, help="also write JSON data and a manifest here")
    common(sp, None)
    sp.set_defaults(func=cmd_eqm)

    sp = sub.add_parser("density", help="level density K_n(x,x)/n")
    sp.add_argument("--potential", default="gue")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--grid", default=None, help="lo,hi,count")
    sp.add_argument("--out", default=".")
    common(sp, 1e-10)
    sp.set_defaults(func=cmd_density)

    sp = sub.add_parser("gap", help="gap probability curve")
    sp.add_argument("--potential", default="gue")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--kind", choices=["plain", "bulk", "edge"], default="plain")
    sp.add_argument("--smax", type=float, default=1.0)
    sp.add_argument("--smin", type=float, default=None)
    sp.add_argument("--ns", type=int, default=41)
    sp.add_argument("--center", type=float, default=0.0)
    sp.add_argument("--quad", type=int, default=40, help="Gauss-Legendre nodes for the determinant")
    sp.add_argument("--mc", type=int, default=0, help="GUE Monte-Carlo trials to compare against")
    sp.add_argument("--out", default=".")
    common(sp, 1e-10)
    sp.set_defaults(func=cmd_gap)

    sp = sub.add_parser("pii", help="Painleve II transcendent on a grid")
    sp.add_argument("--stokes", default="i,0,-i")
    sp.add_argument("--xmin", type=float, default=-12.0)
    sp.add_argument("--xmax", type=float, default=8.0)
    sp.add_argument("--nx", type=int, default=201)
    sp.add_argument("--out", default=".")
    common(sp, 1e-8)
    sp.set_defaults(func=cmd_pii)

    sp = sub.add_parser("airy-experiment", help="Cauchy error of the Airy-corrected problem versus n")
    sp.add_argument("--potential", default="gue")
    sp.add_argument("--n", default="20,50,100,200")
    sp.add_argument("--out", default=".")
    common(sp, 1e-2)
    sp.set_defaults(func=cmd_airy_experiment)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (UnsupportedDeformationError, UnsupportedPotentialError, DegenerateEdgeError) as exc:
        print(f"numrh: unsupported configuration: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (UsageError, StokesError, SupportError, RHSolveError, ConvergenceError, ValueError, FloatingPointError) as exc:
        print(f"numrh: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
