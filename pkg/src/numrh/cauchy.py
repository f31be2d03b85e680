"""Cauchy transforms of mapped Chebyshev polynomials.

For a segment with affine map M the transform of T_k(M(t)) is the transform of
T_k over [-1, 1] evaluated at M(z).  With w = J_+^{-1}(M(z)) inside the unit disk

    C T_k = (i/pi) * [A_k(w) + B_k(w)],
    A_k(w) = w^k (arctanh w - mu_{k-1}(1/w)),
    B_k(w) = w^{-k} (arctanh w - mu_k(w)),

and -2i/pi * A_k, -2i/pi * B_k are the functions psi_k and psi_{-k} (up to a
constant shift between the two for odd k that cancels in the sum).  ``A``
obeys a stable forward recurrence, ``B`` a stable backward one.
"""

import math

import numpy as np

from .chebcore import STANDARD

TWO_PI_I = 2j * np.pi

# B_K is started by direct summation of its Taylor tail when |w| is below this
_SERIES_RADIUS = 0.99


def inv_joukowski_exterior(z):
    """J_+^{-1}(z) = z - sqrt(z-1) sqrt(z+1), computed without cancellation for large z."""
    z = np.asarray(z, dtype=complex)
    s = np.sqrt(z - 1) * np.sqrt(z + 1)
    # z - s = 1/(z + s) exactly; pick the form that does not cancel
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(np.abs(z + s) >= 1, 1 / (z + s), z - s)
        # a signed zero in Im z can select the other root on the real axis off [-1, 1]
        w = np.where(np.abs(w) > 1, 1 / w, w)
    return w


def inv_joukowski_boundary(x, side=+1):
    """Boundary value of J_+^{-1} on (-1, 1); side=+1 gives J_down^{-1}(x) = x - i sqrt(1-x) sqrt(1+x)."""
    x = np.real(np.asarray(x, dtype=complex))
    w = x - 1j * np.sqrt(1 - x) * np.sqrt(1 + x)
    return w if side > 0 else np.conj(w)


def mu(k, z):
    """mu_k(z) = sum_{j=1}^{floor((k+1)/2)} z^{2j-1}/(2j-1)."""
    z = np.asarray(z, dtype=complex)
    out = np.zeros_like(z)
    for j in range(1, (k + 1) // 2 + 1):
        out = out + z ** (2 * j - 1) / (2 * j - 1)
    return out


def _hyp2f1_11(c, y, tol=1e-17, maxiter=100000):
    # 2F1(1, 1; c; y) by its Taylor series; ratio of consecutive terms is (1+j)^2/((c+j)(1+j)) y
    y = np.asarray(y, dtype=complex)
    term = np.ones_like(y)
    total = np.ones_like(y)
    for j in range(maxiter):
        term = term * (1 + j) / (c + j) * y
        total = total + term
        if np.all(np.abs(term) <= tol * np.abs(total)):
            break
    return total


def psi_k(k, w):
    """psi_k(w) for w inside the unit disk (the three-branch hypergeometric formula).

    The 2F1 form is used when its argument is within 0.8 of the origin,
    otherwise the equivalent arctanh-shifted expression is used.
    """
    w = np.asarray(w, dtype=complex)
    if np.any(np.isclose(w, 1.0, atol=0, rtol=0)) or np.any(w == -1.0):
        raise ZeroDivisionError("psi_k is singular at w = +-1")
    pref = 2 / (1j * np.pi)
    if k == 0:
        return pref * np.arctanh(w)
    if k < 0:
        f = (-k) // 2
        y = w**2 / (w**2 - 1)
        small = np.abs(y) <= 0.8
        out = np.empty_like(w)
        if np.any(small):
            ws = w[small] if w.ndim else w
            hyp = _hyp2f1_11(1.5 + f, ws**2 / (ws**2 - 1))
            val = ws ** (1 + 2 * f + k) / ((1 - ws**2) * (1 + 2 * f)) * hyp
            if w.ndim:
                out[small] = val
            else:
                out = val
        if np.any(~small):
            # tail of arctanh: sum over odd m >= 2f+1 of w^(m-|k|)/m
            wl = w[~small] if w.ndim else w
            val = wl ** (-(-k)) * (np.arctanh(wl) - mu(2 * f - 1, wl))
            if w.ndim:
                out[~small] = val
            else:
                out = val
        return pref * out
    g = (k + 1) // 2
    y = 1 / (1 - w**2)  # = w^-2 / (w^-2 - 1)
    small = np.abs(y) <= 0.8
    out = np.empty_like(w)
    if np.any(small):
        ws = w[small] if w.ndim else w
        inv = 1 / ws
        hyp = _hyp2f1_11(1.5 + g, 1 / (1 - ws**2))
        tail = inv ** (2 * g + 1 - k) / ((1 - inv**2) * (1 + 2 * g)) * hyp
        at_inv = np.arctanh(ws) - _continued_arctanh_gap(ws)
        val = ws**k * (np.arctanh(ws) - at_inv) + tail
        if w.ndim:
            out[small] = val
        else:
            out = val
    if np.any(~small):
        wl = w[~small] if w.ndim else w
        val = wl**k * (np.arctanh(wl) - mu(2 * g - 1, 1 / wl))
        if w.ndim:
            out[~small] = val
        else:
            out = val
    return pref * out


def _continued_arctanh_gap(w):
    # arctanh(w) - arctanh(1/w) on the branch continuous with the reduced form.
    # Only reached when |1/(1-w^2)| <= 0.8, which excludes the real axis.
    return 0.5j * np.pi * np.where(np.imag(w) > 0, 1.0, -1.0)


def _tail_top(w, K):
    # B_K(w) = sum over odd m > K of w^(m-K)/m by direct summation (|w| < 1)
    first = K + 1 if K % 2 == 0 else K + 2
    w2 = w * w
    nterms = int(np.ceil(np.log(1e-18) / (2 * np.log(max(np.max(np.abs(w)), 1e-300))))) + 2
    nterms = max(nterms, 2)
    m = first + 2 * np.arange(nterms)
    powers = w[:, None] ** (first - K) * w2[:, None] ** np.arange(nterms)
    return np.sum(powers / m, axis=1)


def cauchy_table(w, K):
    """C T_k over [-1,1] at the points with J_+^{-1}-image w, for k = 0..K-1.

    ``w`` is a 1d array inside the closed unit disk (|w| = 1 gives boundary values).
    Returns an array of shape (len(w), K).
    """
    w = np.asarray(w, dtype=complex).ravel()
    npt = w.size
    out = np.zeros((npt, K), dtype=complex)
    if K == 0 or npt == 0:
        return out
    at = np.arctanh(w)
    # A_k: forward, A_k = w A_{k-1} - [k-1 odd] w/(k-1)
    A = np.empty((npt, K), dtype=complex)
    A[:, 0] = at
    for k in range(1, K):
        A[:, k] = w * A[:, k - 1]
        if (k - 1) % 2 == 1:
            A[:, k] -= w / (k - 1)
    B = np.empty((npt, K), dtype=complex)
    absw = np.abs(w)
    inner = absw < _SERIES_RADIUS
    if np.any(inner):
        wi = w[inner]
        Bi = np.empty((wi.size, K), dtype=complex)
        Bi[:, K - 1] = _tail_top(wi, K - 1)
        # backward: B_{k-1} = w B_k + [k odd] w/k
        for k in range(K - 1, 0, -1):
            Bi[:, k - 1] = wi * Bi[:, k]
            if k % 2 == 1:
                Bi[:, k - 1] += wi / k
        B[inner] = Bi
    outer = ~inner
    if np.any(outer):
        wo = w[outer]
        Bo = np.empty((wo.size, K), dtype=complex)
        Bo[:, 0] = at[outer]
        for k in range(1, K):
            prev = Bo[:, k - 1]
            if k % 2 == 1:
                prev = prev - wo / k
            Bo[:, k] = prev / wo
        B[outer] = Bo
    return (1j / np.pi) * (A + B)


def _cauchy_std(K, x, side=0):
    # x: points in the M-plane.  side=0 off the interval, +-1 boundary values.
    x = np.asarray(x, dtype=complex).ravel()
    if side == 0:
        w = inv_joukowski_exterior(x)
    else:
        w = inv_joukowski_boundary(x, side)
    return cauchy_table(w, K)


def cauchy_basis(k, imap, z):
    """Cauchy transform of T_k(M(t)) over the leg, at z off the leg."""
    z = np.asarray(z, dtype=complex)
    x = imap.forward(z)
    vals = _cauchy_std(k + 1, x)[:, k]
    return vals.reshape(z.shape)


def cauchy_basis_boundary(k, imap, x, side):
    """One-sided limit on the open leg; side=+1 is the left of the direction of travel."""
    x = np.asarray(x, dtype=complex)
    t = np.real(imap.forward(x))
    if np.any(np.abs(t) >= 1):
        raise ValueError("boundary values are only defined on the open leg; use cauchy_basis_junction")
    return _cauchy_std(k + 1, t, side=side)[:, k].reshape(x.shape)


def p_endpoint(k, sign):
    """P_k(+-1) where int_{-1}^1 T_k(t)/(t-z) dt = T_k(z) log((z-1)/(z+1)) + P_k(z)."""
    x = float(sign)
    p_prev, p = 0.0, 2.0
    if k == 0:
        return 0.0
    for j in range(1, k):
        cj = 2 / (1 - j * j) if j % 2 == 0 else 0.0
        p_prev, p = p, 2 * x * p - p_prev + 2 * cj
    return p


def junction_constants(k, endpoint, imap=STANDARD):
    """(a_k, r_k) for the finite part at the left ('L') or right ('R') end of a leg."""
    dm = math.log(abs(imap.derivative))
    if endpoint == "L":
        r = -((-1) ** k) / TWO_PI_I
        a = (-1) ** k * math.log(2) / TWO_PI_I + (-1) ** k / (1j * np.pi) * (
            mu(k - 1, -1.0) + mu(k, -1.0)
        ) + r * dm
    elif endpoint == "R":
        r = 1 / TWO_PI_I
        a = -math.log(2) / TWO_PI_I + 1 / (1j * np.pi) * (mu(k - 1, 1.0) + mu(k, 1.0)) + r * dm
    else:
        raise ValueError("endpoint must be 'L' or 'R'")
    return complex(a), complex(r)


def _arg_principal(z):
    return float(np.angle(z))


def junction_arg(endpoint, theta, leg_angle, side=0):
    """The angular term of the finite part; side selects the limit when theta is the leg's own direction."""
    if endpoint == "L":
        phase = -np.exp(1j * (theta - leg_angle))
        on_leg = abs(((theta - leg_angle + np.pi) % (2 * np.pi)) - np.pi) < 1e-14
        if on_leg:
            if side == 0:
                raise ValueError("approach along the leg needs a side")
            return -np.pi if side > 0 else np.pi
        return _arg_principal(phase)
    phase = np.exp(1j * (theta - leg_angle))
    on_leg = abs(((theta - leg_angle) % (2 * np.pi)) - np.pi) < 1e-14
    if on_leg:
        if side == 0:
            raise ValueError("approach along the leg needs a side")
        return np.pi if side > 0 else -np.pi
    return _arg_principal(phase)


def cauchy_basis_junction(k, imap, endpoint, theta, side=0):
    """Finite part of C[T_k o M] at an endpoint of the leg, approached along the ray of angle theta."""
    a, r = junction_constants(k, endpoint, imap)
    return a + 1j * r * junction_arg(endpoint, theta, imap.angle, side)


def junction_table(K, imap, endpoint, theta, side=0):
    """Finite parts for k = 0..K-1 (vectorised over k, using the P_k recurrence)."""
    dm = math.log(abs(imap.derivative))
    sgn = 1.0 if endpoint == "R" else -1.0
    P = np.zeros(K)
    if K > 1:
        P[1] = 2.0
    for j in range(1, K - 1):
        cj = 2 / (1 - j * j) if j % 2 == 0 else 0.0
        P[j + 1] = 2 * sgn * P[j] - P[j - 1] + 2 * cj
    Tk = sgn ** np.arange(K)
    ang = junction_arg(endpoint, theta, imap.angle, side)
    if endpoint == "R":
        fp = Tk * (-math.log(2) + dm + 1j * ang) + P
    else:
        # log((M-1)/(M+1)) ~ log 2 - log eps - log|M'| + i arg(-e^{-i(theta-leg)})
        fp = Tk * (math.log(2) - dm - 1j * ang) + P
    return fp / TWO_PI_I
