"""Chebyshev series on affinely mapped intervals.

Everything here works on the extrema (second-kind) grid, endpoints included,
so that junction points of a contour are always collocation points.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class IntervalMap:
    """Affine map M(z) = (2z - a - b)/(b - a) taking the segment [a, b] to [-1, 1]."""

    a: complex
    b: complex

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError("degenerate interval: a == b")

    def forward(self, z):
        return (2 * np.asarray(z) - self.a - self.b) / (self.b - self.a)

    def inverse(self, x):
        return 0.5 * (self.b - self.a) * np.asarray(x) + 0.5 * (self.a + self.b)

    @property
    def derivative(self):
        """dM/dz."""
        return 2 / (self.b - self.a)

    @property
    def angle(self):
        return float(np.angle(self.b - self.a))

    @property
    def length(self):
        return float(abs(self.b - self.a))


STANDARD = IntervalMap(-1.0, 1.0)


def cheb_points(m, imap=STANDARD):
    """Mapped Chebyshev extrema, ordered from the left endpoint to the right."""
    if m < 2:
        raise ValueError("need at least 2 Chebyshev points")
    x = np.cos(np.pi * (1 - np.arange(m) / (m - 1)))
    # exact symmetric values, so that x[0] = -1, x[-1] = 1 and the midpoint is 0
    x = 0.5 * (x - x[::-1])
    return imap.inverse(x)


def _values_to_coeffs(values):
    # type-I DCT on the extrema grid, values ordered from -1 to +1
    v = np.asarray(values)
    m = v.shape[0]
    if m < 2:
        raise ValueError("need at least 2 samples")
    n = m - 1
    # reorder to theta_j = pi j / n, i.e. x_j = cos(theta_j) running from +1 to -1
    v = v[::-1]
    ext = np.concatenate([v, v[-2:0:-1]], axis=0)
    c = np.fft.fft(ext, axis=0)[:m] / n
    c[0] /= 2
    c[-1] /= 2
    if not np.iscomplexobj(v):
        c = c.real
    return c


@dataclass(frozen=True)
class ChebSeries:
    """Chebyshev-T expansion sum_k c_k T_k(M(z)).

    ``coeffs`` has shape (m,) for scalars or (m, 2, 2) for matrix-valued series.
    """

    imap: IntervalMap
    coeffs: np.ndarray = field(repr=False)

    def __call__(self, z):
        return cheb_eval(self, z)

    @property
    def size(self):
        return self.coeffs.shape[0]


def cheb_transform(samples, imap=STANDARD):
    """Coefficients of the interpolant through samples at ``cheb_points(len(samples), imap)``."""
    return ChebSeries(imap, _values_to_coeffs(samples))


def clenshaw(coeffs, x):
    """Evaluate sum c_k T_k(x) for complex x; coeffs may carry trailing matrix axes."""
    c = np.asarray(coeffs)
    x = np.asarray(x)
    tail = c.shape[1:]
    xb = x.reshape(x.shape + (1,) * len(tail))
    b1 = np.zeros(x.shape + tail, dtype=np.result_type(c, x, float))
    b2 = np.zeros_like(b1)
    for k in range(c.shape[0] - 1, 0, -1):
        b1, b2 = 2 * xb * b1 - b2 + c[k], b1
    return xb * b1 - b2 + c[0]


def cheb_eval(series, z):
    return clenshaw(series.coeffs, series.imap.forward(z))


def cheb_diff(series):
    """Derivative with respect to z, chain-rule factor included."""
    c = np.asarray(series.coeffs)
    m = c.shape[0]
    if m == 1:
        return ChebSeries(series.imap, np.zeros_like(c))
    d = np.zeros((m,) + c.shape[1:], dtype=c.dtype)
    for k in range(m - 1, 0, -1):
        d[k - 1] = (d[k + 1] if k + 1 < m else 0) + 2 * k * c[k]
    d[0] /= 2
    return ChebSeries(series.imap, d[:-1] * series.imap.derivative)


def adaptive_cheb(f, imap=STANDARD, tol=1e-14, m0=17, mmax=2049):
    """Sample f on doubling grids until the two trailing coefficients are below tol (relative)."""
    m = m0
    while True:
        c = _values_to_coeffs(f(cheb_points(m, imap)))
        scale = np.max(np.abs(c))
        if scale == 0 or np.max(np.abs(c[-2:])) <= tol * scale or m >= mmax:
            return ChebSeries(imap, c)
        m = 2 * (m - 1) + 1


def chop(coeffs, tol=1e-15):
    """Drop trailing coefficients below tol relative to the largest."""
    c = np.asarray(coeffs)
    mag = np.abs(c).reshape(c.shape[0], -1).max(axis=1)
    big = np.nonzero(mag > tol * mag.max())[0] if mag.max() > 0 else [0]
    return c[: big[-1] + 1] if len(big) else c[:1]
