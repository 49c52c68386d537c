"""Shared quadrature rules (Gauss-Legendre and degree-5 triangle rule)."""

from functools import lru_cache

import numpy as np

# 7-point degree-5 triangle rule; barycentric nodes and weights summing to 1
_A1 = 0.059715871789770
_B1 = 0.470142064105115
_A2 = 0.797426985353087
_B2 = 0.101286507323456
TRI7_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_A1, _B1, _B1],
    [_B1, _A1, _B1],
    [_B1, _B1, _A1],
    [_A2, _B2, _B2],
    [_B2, _A2, _B2],
    [_B2, _B2, _A2],
])
TRI7_W = np.array([0.225,
                   0.132394152788506, 0.132394152788506, 0.132394152788506,
                   0.125939180544827, 0.125939180544827, 0.125939180544827])


@lru_cache(maxsize=32)
def gauss_legendre(n):
    """Nodes and weights on [-1, 1], cached."""
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gauss_on_interval(a, b, n):
    """Gauss-Legendre nodes/weights mapped to [a, b]."""
    x, w = gauss_legendre(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def geometric_panels(r_inner, r_outer, ratio=2.0):
    """Panel breakpoints from r_inner to r_outer growing geometrically.

    Used for integrable singularities: the innermost panel starts at
    r_inner (the skipped core carries negligible mass for log-type
    kernels).
    """
    if r_outer <= r_inner:
        r_inner = r_outer / 2.0
    n = int(np.ceil(np.log(r_outer / r_inner) / np.log(ratio)))
    pts = r_inner * ratio ** np.arange(n + 1)
    pts[-1] = r_outer
    return np.concatenate([[r_inner], pts[pts > r_inner]])
