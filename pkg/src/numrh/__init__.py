"""Numerical Riemann-Hilbert problems: Chebyshev collocation, orthogonal polynomials,
Fredholm determinants and Painleve II."""

__version__ = "0.1.0"
